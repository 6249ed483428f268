"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v -s`` to see the lines as they are
produced; they are repeated in the session summary either way. The two
synthetic training reproductions take several minutes in total.
"""

import os
import time
from fractions import Fraction

import numpy as np
import pytest

from oracles import wishart_ml_classify
from polcnn import io
from polcnn.cnn import (CnnLayer, NetworkConfig, TrainConfig, adapt_learning_rate, gradcheck,
                        init_weights, train)
from polcnn.experiment import (SITE_MAX_ITERATIONS, SITE_REFERENCE, SITE_TRAIN_PER_CLASS,
                               format_sweep, holdout_mask, load_site, run_protocol,
                               synth4_protocol, window_sweep)
from polcnn.metrics import ConfusionMatrix, accuracy_stats
from polcnn.pipeline import LabelRaster, build_dataset, classify_image, sample_training_pixels
from polcnn.polsar import (ScatteringImage, boxcar_multilook, build_hermitian_image,
                           coherency_to_covariance, features_from_coherency, lexicographic_vector,
                           look_span, pauli_vector, span)
from polcnn.rng import circular_complex_normal, make_rng
from polcnn.synth import generate_scene, synth4


# -- 1. gradient oracle ----------------------------------------------------------

GRAD_CONFIGS = {
    "3ch 7x7 one CNN layer": NetworkConfig(3, 7, (CnnLayer(20),), (10,), num_classes=4),
    "4ch 21x21 one CNN layer": NetworkConfig(4, 21, (CnnLayer(20),), (10,), num_classes=5),
    "6ch 9x9 two CNN layers": NetworkConfig(6, 9, (CnnLayer(20), CnnLayer(20)), (10,),
                                            num_classes=4),
}


def test_criterion_1_gradient_oracle(criterion):
    t0 = time.perf_counter()
    worst = {}
    for name, config in GRAD_CONFIGS.items():
        worst[name] = max(gradcheck(config, seed=s, h=1e-6).max_rel_error for s in range(5))
    elapsed = time.perf_counter() - t0
    top = max(worst.values())
    detail = ", ".join(f"{k}: {v:.2e}" for k, v in worst.items()) + f"; {elapsed:.1f} s"
    ok = criterion(1, "backprop vs central differences, max rel error < 1e-6 in < 60 s",
                   top < 1e-6 and elapsed < 60, detail)
    assert ok, detail


# -- 2. published confusion-matrix arithmetic ------------------------------------------

TABLE_8 = {
    "counts": [[78621, 0, 0, 0, 27],
               [0, 17940, 38, 4, 0],
               [0, 313, 4202, 0, 20],
               [78, 71, 68, 6956, 0],
               [0, 0, 128, 0, 13531]],
    "overall": 99.39,
    "producer": [99.97, 99.77, 92.66, 96.97, 99.06],
    "user": [99.90, 97.90, 94.72, 99.94, 99.65],
}

TABLE_14 = {
    "counts": [[49616, 287, 27, 70],
               [13, 48489, 701, 797],
               [44, 1539, 46664, 1753],
               [89, 632, 1346, 47933]],
    "overall": 96.35,
    "producer": [99.23, 96.98, 93.33, 95.87],
    "user": [99.71, 95.18, 95.74, 94.82],
}


def _percent(v):
    return np.round(100.0 * np.asarray(v), 2)


def test_criterion_2_table_arithmetic(criterion):
    t0 = time.perf_counter()
    mismatches = []
    for name, table in (("SFBay_L", TABLE_8), ("Flevo_C", TABLE_14)):
        stats = accuracy_stats(ConfusionMatrix(np.array(table["counts"])))
        if _percent(stats.overall) != table["overall"]:
            mismatches.append(f"{name} OA {_percent(stats.overall)}")
        for kind in ("producer", "user"):
            got = _percent(getattr(stats, kind))
            for i, (g, want) in enumerate(zip(got, table[kind])):
                if g != want:
                    mismatches.append(f"{name} {kind}[{i}] {g} != {want}")
    elapsed = time.perf_counter() - t0
    detail = (f"OA 99.39% and 96.35%, 18 class percentages; {elapsed * 1e3:.1f} ms"
              if not mismatches else "; ".join(mismatches))
    ok = criterion(2, "published confusion matrices reproduce every percentage",
                   not mismatches and elapsed < 1, detail)
    assert ok, detail


# -- 3. end-to-end synthetic reproduction ---------------------------------------------

@pytest.mark.slow
def test_criterion_3_synth4_end_to_end(criterion):
    h_T, ids = generate_scene(synth4(seed=0))
    t0 = time.perf_counter()
    result = run_protocol(h_T, LabelRaster(ids), "T3", 9, per_class=500,
                          max_iterations=400, seed=0)
    elapsed = time.perf_counter() - t0
    s = result.samples
    test = holdout_mask(ids, s)
    oracle = wishart_ml_classify(h_T.data, (s.x, s.y), s.classes)
    oracle_oa = float(np.mean(oracle[test] == ids[test]))
    oa = result.overall
    detail = (f"CNN OA {oa:.4f}, Wishart ML oracle OA {oracle_oa:.4f}, "
              f"{test.sum()} test pixels, train {result.train_seconds:.0f} s, "
              f"total {elapsed:.0f} s")
    ok = criterion(3, "synth4 OA >= 0.95 and within 3 points of the Wishart oracle",
                   oa >= 0.95 and oa >= oracle_oa - 0.03, detail)
    assert ok, detail


# -- 4. learning-rate schedule ---------------------------------------------------------

def _chain(lr, up, down):
    # (decrease, decrease, increase) of the train MSE
    out = []
    for prev, new in ((1.0, 0.5), (0.5, 0.25), (0.25, 0.3)):
        lr = adapt_learning_rate(lr, prev, new, up, down)
        out.append(lr)
    return out


def test_criterion_4_learning_rate_schedule(criterion):
    want = [Fraction("0.0525"), Fraction("0.055125"), Fraction("0.0385875")]
    exact = _chain(Fraction("0.05"), Fraction("1.05"), Fraction("0.70"))
    floats = _chain(0.05, 1.05, 0.70)
    float_ok = all(abs(f - float(w)) <= 4 * np.spacing(float(w)) for f, w in zip(floats, want))
    detail = (f"exact rationals {[str(x) for x in exact]}; "
              f"float64 {[repr(f) for f in floats]}")
    ok = criterion(4, "0.05 -> 0.0525 -> 0.055125 -> 0.0385875",
                   exact == want and float_ok, detail)
    assert ok, detail


# -- 5. structural invariants -------------------------------------------------------------

def _hermitian_psd(data, rel=1e-12):
    herm = np.array_equal(data, np.conj(np.swapaxes(data, -1, -2)))
    w = np.linalg.eigvalsh(data)
    psd = bool(np.all(w[..., 0] >= -rel * np.maximum(w[..., -1], 1e-300)))
    return herm, psd


def test_criterion_5_structural_invariants(criterion):
    t0 = time.perf_counter()
    z = circular_complex_normal(make_rng(11), (3, 4, 50, 50)) * make_rng(12).uniform(
        0.01, 10.0, (3, 1, 1, 1))
    img = ScatteringImage(z[0], z[1], z[2])
    hh, hv, vv = img.hh[0].ravel(), img.hv[0].ravel(), img.vv[0].ravel()  # 10,000 pixels
    p = span(hh, hv, vv)
    nk = np.sum(np.abs(pauli_vector(hh, hv, vv)) ** 2, axis=-1)
    nw = np.sum(np.abs(lexicographic_vector(hh, hv, vv)) ** 2, axis=-1)
    norms = bool(np.allclose(nk, p, rtol=1e-12, atol=0) and np.allclose(nw, p, rtol=1e-12, atol=0))

    T = build_hermitian_image(img, "pauli")
    C = build_hermitian_image(img, "lexicographic")
    ls = look_span(img)
    traces = bool(np.allclose(T.trace(), ls, rtol=1e-12, atol=0)
                  and np.allclose(C.trace(), ls, rtol=1e-12, atol=0))

    scene_T, _ = generate_scene(synth4(seed=0, size=64))
    checks = {
        "T": T.data, "C": C.data, "A T A^H": coherency_to_covariance(T).data,
        "synth4 T": scene_T.data, "boxcar 5 T": boxcar_multilook(scene_T, 5).data,
    }
    failed = [k for k, m in checks.items() if not all(_hermitian_psd(m))]
    elapsed = time.perf_counter() - t0
    detail = (f"norms {'ok' if norms else 'BAD'}, traces {'ok' if traces else 'BAD'}, "
              f"Hermitian+PSD {len(checks) - len(failed)}/{len(checks)}"
              + (f" (failed: {', '.join(failed)})" if failed else "") + f"; {elapsed:.2f} s")
    ok = criterion(5, "||k||^2 = ||Omega||^2 = span, Hermitian PSD, tr T = tr C = span",
                   norms and traces and not failed and elapsed < 5, detail)
    assert ok, detail


# -- 6. determinism and persistence ------------------------------------------------------

def _train_small(cube, labels):
    s = sample_training_pixels(labels, per_class=30, seed=5)
    net = init_weights(NetworkConfig(3, 9, num_classes=labels.num_classes, seed=5))
    net, _ = train(net, build_dataset(cube, s, 9), TrainConfig(15, shuffle_seed=5))
    net.channel_names, net.scaling = cube.names, cube.scaling
    return net


def test_criterion_6_determinism_and_persistence(criterion, tmp_path):
    t0 = time.perf_counter()
    h_T, ids = generate_scene(synth4(seed=3, size=64))
    cube = features_from_coherency(h_T, "T3")
    labels = LabelRaster(ids)
    io.save_model(_train_small(cube, labels), tmp_path / "a.pcnn")
    io.save_model(_train_small(cube, labels), tmp_path / "b.pcnn")
    same_file = (tmp_path / "a.pcnn").read_bytes() == (tmp_path / "b.pcnn").read_bytes()

    net = _train_small(cube, labels)
    before, before_scores = classify_image(net, cube)
    io.save_model(net, tmp_path / "c.pcnn")
    after, after_scores = classify_image(io.load_model(tmp_path / "c.pcnn"), cube)
    same_output = (np.array_equal(before.ids, after.ids)
                   and np.array_equal(before_scores, after_scores))
    elapsed = time.perf_counter() - t0
    detail = (f"model files {'identical' if same_file else 'DIFFER'}, "
              f"classification {'bit-exact' if same_output else 'DIFFERS'}; {elapsed:.1f} s")
    ok = criterion(6, "seeded training is byte-reproducible, save/load/classify bit-exact",
                   same_file and same_output and elapsed < 60, detail)
    assert ok, detail


# -- 7. over-capacity trend -----------------------------------------------------------------

@pytest.mark.slow
def test_criterion_7_over_capacity_trend(criterion):
    rows = []
    for seed in range(3):
        base = synth4_protocol(seed, channel_set="T3", window=9, per_class=120,
                               max_iterations=400)
        big = synth4_protocol(seed, channel_set="T3", window=9, per_class=120,
                              max_iterations=400, m=4, n=2)
        rows.append((seed, base.overall, big.overall, big.overall <= base.overall + 0.005))
    wins = sum(r[3] for r in rows)
    detail = "; ".join(f"seed {s}: default {a:.4f}, m4n2 {b:.4f}" for s, a, b, _ in rows)
    ok = criterion(7, "m=4,n=2 OA <= default OA + 0.5 points on a majority of 3 seeds",
                   wins >= 2, f"{wins}/3 seeds; {detail}")
    assert ok, detail


# -- 8. benchmark sites (conditional) -----------------------------------------------------

def _benchmark_windows():
    raw = os.environ.get("POLCNN_BENCHMARK_WINDOWS", "7,9,11,13,15,17,19,21,23")
    return tuple(int(w) for w in raw.split(","))


def _run_sites(directory, windows, **overrides):
    lines = []
    found = 0
    for site in SITE_MAX_ITERATIONS:
        data = load_site(directory, site)
        if data is None:
            continue
        found += 1
        h_T, labels = data
        kwargs = dict(per_class=SITE_TRAIN_PER_CLASS[site],
                      max_iterations=SITE_MAX_ITERATIONS[site], seed=0)
        kwargs.update(overrides)
        sweep = window_sweep(h_T, labels, windows, ("T3",), **kwargs)
        print(f"\n{site}, 3-channel window sweep\n{format_sweep(sweep)}")
        best = max(sweep.values(), key=lambda r: r.overall)
        lines.append(f"{site} 3-channel best OA {best.overall:.4f} at {best.window}x{best.window}")
        channel_set, window, reference = SITE_REFERENCE[site]
        ref = run_protocol(h_T, labels, channel_set, window, **kwargs)
        lines.append(f"{site} {channel_set} {window}x{window} OA {ref.overall:.4f} "
                     f"(published {reference:.4f}, logged only)")
    return found, lines


def test_criterion_8_benchmark_sites(criterion, tmp_path):
    directory = os.environ.get("POLCNN_BENCHMARK_DIR")
    if directory:
        found, lines = _run_sites(directory, _benchmark_windows())
        if not found:
            criterion(8, "benchmark sweep", False, f"no <site>.polh + <site>.pgm in {directory}")
            pytest.fail(f"POLCNN_BENCHMARK_DIR={directory} holds no benchmark site")
        criterion(8, "benchmark sweep ran end-to-end (accuracies logged, not gated)", True,
                  "; ".join(lines))
        return
    # No data supplied: the criterion is not triggered. Exercise the same
    # harness on a small synthetic stand-in so a broken harness still fails.
    h_T, ids = generate_scene(synth4(seed=1, size=48))
    io.write_hermitian(coherency_to_covariance(h_T), tmp_path / "sfbay_l.polh")
    io.write_labels(LabelRaster(ids), tmp_path / "sfbay_l.pgm")
    found, lines = _run_sites(tmp_path, (5, 7), per_class=40, max_iterations=3)
    ok = criterion(8, "benchmark sweep (conditional)", found == 1 and len(lines) == 2,
                   "not triggered, POLCNN_BENCHMARK_DIR unset; harness ran on a 48x48 "
                   "synthetic stand-in")
    assert ok
