"""Train and evaluate the compact CNN on the synthetic four-class scene.

Generates the ``synth4`` scene, extracts dB-scaled T11/T22/T33 features,
trains the default network on 500 pixels per class, classifies every
pixel and prints the confusion matrix over the held-out labeled pixels.
A per-pixel Wishart maximum-likelihood classifier trained on the same
pixels is shown for comparison.

    python demos/synth4_end_to_end.py --epochs 400 --out /tmp/synth4

Images written to ``--out``: Pauli composite, ground truth and prediction
masks (PPM), the trained model and the training history.
"""

import argparse
import time
from pathlib import Path

import numpy as np

from polcnn import io
from polcnn.experiment import holdout_mask, run_protocol
from polcnn.metrics import confusion_matrix, format_report
from polcnn.pipeline import LabelRaster
from polcnn.polsar import pauli_rgb
from polcnn.synth import generate_scene, synth4


def wishart_ml(T, samples):
    # class centres from the training pixels, then argmin of ln|S| + tr(S^-1 T)
    dist = []
    for c in sorted(set(samples.classes.tolist())):
        m = samples.classes == c
        S = T[samples.y[m], samples.x[m]].mean(axis=0)
        dist.append(np.linalg.slogdet(S)[1]
                    + np.einsum("ij,hwji->hw", np.linalg.inv(S), T).real)
    return np.argmin(dist, axis=0) + 1


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--epochs", type=int, default=100)
    ap.add_argument("--window", type=int, default=9)
    ap.add_argument("--per-class", type=int, default=500)
    ap.add_argument("--channels", default="T3", choices=("T3", "T3_SPAN", "T3_C3"))
    ap.add_argument("--out", type=Path, default=Path("synth4_out"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    spec = synth4(seed=args.seed)
    h_T, ids = generate_scene(spec)
    labels = LabelRaster(ids, class_names=spec.class_names)
    print(f"scene {spec.width}x{spec.height}, {spec.looks} looks, "
          f"pixels per class {labels.counts()[1:].tolist()}")

    def progress(epoch, hist):
        if epoch == 1 or epoch % max(1, args.epochs // 10) == 0:
            print(f"  epoch {epoch:4d}  mse {hist.train_mse[-1]:.5f}  "
                  f"next lr {hist.next_learning_rate[-1]:.4g}")

    result = run_protocol(h_T, labels, args.channels, args.window, per_class=args.per_class,
                          max_iterations=args.epochs, seed=args.seed, keep=True,
                          callback=progress)
    print(f"trained in {result.train_seconds:.1f} s, classified in "
          f"{result.classify_seconds:.1f} s\n")
    print(format_report(result.confusion))

    t0 = time.perf_counter()
    oracle = wishart_ml(h_T.data, result.samples)
    test = holdout_mask(ids, result.samples)
    cm = confusion_matrix(np.where(test, oracle, 0), np.where(test, ids, 0), 4,
                          class_names=spec.class_names)
    print(f"\nWishart ML on the same training pixels ({time.perf_counter() - t0:.1f} s):")
    print(format_report(cm))

    io.write_ppm(pauli_rgb(h_T), args.out / "pauli.ppm")
    io.write_mask(labels, args.out / "truth.ppm")
    io.write_mask(result.pred, args.out / "pred.ppm")
    io.save_model(result.net, args.out / "model.pcnn")
    io.write_history(result.history, args.out / "history.csv")
    print(f"\nwrote images, model and history to {args.out}/")


if __name__ == "__main__":
    main()
