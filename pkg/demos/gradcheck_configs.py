"""Back-propagation against central finite differences on a few topologies.

    python demos/gradcheck_configs.py
"""

import time

from polcnn.cnn import CnnLayer, NetworkConfig, gradcheck

CONFIGS = {
    "3ch 7x7, CNN 20": NetworkConfig(3, 7, (CnnLayer(20),), (10,), num_classes=4),
    "4ch 21x21, CNN 20": NetworkConfig(4, 21, (CnnLayer(20),), (10,), num_classes=5),
    "6ch 9x9, CNN 20-20": NetworkConfig(6, 9, (CnnLayer(20), CnnLayer(20)), (10,)),
    "3ch 15x15, CNN 8-8, 2x3 pooling": NetworkConfig(
        3, 15, (CnnLayer(8, (3, 3), (2, 3)), CnnLayer(8, (3, 2))), (6,), num_classes=3),
}

print(f"{'config':34} {'params':>7} {'normwise':>10} {'max abs':>10} {'elementwise':>12}")
t0 = time.perf_counter()
for name, cfg in CONFIGS.items():
    for seed in range(3):
        r = gradcheck(cfg, seed=seed)
        print(f"{name if seed == 0 else '':34} {r.n_parameters:7d} {r.max_rel_error:10.2e} "
              f"{r.max_abs_error:10.2e} {r.max_elementwise_rel:12.2e}")
print(f"\n{time.perf_counter() - t0:.1f} s")
# The elementwise column is inflated by parameters whose true gradient is
# close to zero: the finite-difference roundoff is then larger than the
# gradient itself. The normwise figure per tensor is the meaningful one.
