"""Train / classify / score protocol shared by the synthetic and benchmark runs."""

import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cnn import NetworkConfig, TrainConfig, TrainHistory, init_weights, train
from .errors import DataError
from .io import read_hermitian, read_labels
from .metrics import ConfusionMatrix, accuracy_stats, confusion_matrix
from .pipeline import (LabelRaster, SampleSet, build_dataset, classify_image, sample_training_pixels,
                       split_train_validation)
from .polsar import covariance_to_coherency, features_from_coherency
from .synth import generate_scene, synth4

CHANNEL_SETS = ("T3", "T3_SPAN", "T3_C3")

# Maximum training iterations per benchmark site.
SITE_MAX_ITERATIONS = {"sfbay_l": 40, "sfbay_c": 400, "flevo_l": 600, "flevo_c": 400}

# Training pixels per class for each site (about 292 for SFBay_L).
SITE_TRAIN_PER_CLASS = {"sfbay_l": 292, "sfbay_c": 500, "flevo_l": 480, "flevo_c": 500}

# Published best overall accuracy per site and its (channel set, window).
SITE_REFERENCE = {
    "sfbay_l": ("T3_SPAN", 21, 0.9939),
    "sfbay_c": ("T3_SPAN", 19, 0.9532),
    "flevo_l": ("T3_C3", 9, 0.9249),
    "flevo_c": ("T3", 15, 0.9635),
}


@dataclass
class ProtocolResult:
    channel_set: str
    window: int
    overall: float
    confusion: ConfusionMatrix
    history: TrainHistory
    train_seconds: float
    classify_seconds: float
    samples: SampleSet = None
    net: object = None
    pred: LabelRaster = None

    def stats(self):
        return accuracy_stats(self.confusion)


def holdout_mask(labels, samples):
    """Labeled pixels that were not used for training."""
    ids = np.asarray(getattr(labels, "ids", labels))
    mask = ids > 0
    mask[samples.y, samples.x] = False
    return mask


def run_protocol(h_T, labels, channel_set="T3", window=9, per_class=500, fraction=None,
                 max_iterations=400, seed=0, m=1, n=1, boxcar=0, val_split=0.0,
                 num_classes=None, keep=False, callback=None):
    """Sample, train, classify the whole image and score on held-out pixels.

    ``h_T`` is a coherency image; ``labels`` a :class:`LabelRaster` or an
    integer array. Training uses the sampled pixels (less the validation
    share when ``val_split > 0``); accuracy is computed over every other
    labeled pixel. ``m`` and ``n`` scale network width and CNN depth.
    """
    if not isinstance(labels, LabelRaster):
        labels = LabelRaster(np.asarray(labels))
    k = num_classes or labels.num_classes
    cube = features_from_coherency(h_T, channel_set, boxcar=boxcar)
    samples = sample_training_pixels(labels, per_class=per_class, fraction=fraction, seed=seed)
    fit, val = (split_train_validation(samples, val_split, seed=seed) if val_split > 0
                else (samples, None))
    config = NetworkConfig(cube.data.shape[0], window, num_classes=k, seed=seed).scaled(m, n)
    t0 = time.perf_counter()
    net, history = train(init_weights(config), build_dataset(cube, fit, window),
                         TrainConfig(max_iterations, shuffle_seed=seed),
                         validation=None if val is None else build_dataset(cube, val, window),
                         callback=callback)
    t1 = time.perf_counter()
    net.channel_names = cube.names
    net.scaling = cube.scaling
    pred, _ = classify_image(net, cube)
    t2 = time.perf_counter()
    truth = np.where(holdout_mask(labels, samples), labels.ids, 0)
    cm = confusion_matrix(pred, truth, k, class_names=labels.class_names)
    return ProtocolResult(channel_set, window, accuracy_stats(cm).overall, cm, history,
                          t1 - t0, t2 - t1, samples, net if keep else None, pred if keep else None)


def window_sweep(h_T, labels, windows, channel_sets=CHANNEL_SETS, **kwargs):
    """:func:`run_protocol` over every (channel set, window) pair.

    Returns a dict keyed by ``(channel_set, window)``.
    """
    return {(cs, w): run_protocol(h_T, labels, cs, w, **kwargs)
            for cs in channel_sets for w in windows}


def format_sweep(results):
    """Window-by-channel-set accuracy table, one row per window."""
    sets = sorted({cs for cs, _ in results}, key=lambda s: CHANNEL_SETS.index(s)
                  if s in CHANNEL_SETS else len(CHANNEL_SETS))
    windows = sorted({w for _, w in results})
    lines = ["window  " + "  ".join(f"{s:>8}" for s in sets)]
    for w in windows:
        cells = [f"{results[s, w].overall:8.4f}" if (s, w) in results else f"{'-':>8}"
                 for s in sets]
        lines.append(f"{w:>2}x{w:<3}  " + "  ".join(cells))
    return "\n".join(lines)


def load_site(directory, site):
    """Coherency image and ground truth for ``site`` from ``directory``.

    Expects ``<site>.polh`` (coherency, or covariance which is converted)
    and ``<site>.pgm``. Returns ``None`` when either file is missing.
    """
    d = Path(directory)
    herm, gtd = d / f"{site}.polh", d / f"{site}.pgm"
    if not (herm.exists() and gtd.exists()):
        return None
    h = read_hermitian(herm)
    if h.basis == "lexicographic":
        h = covariance_to_coherency(h)
    labels = read_labels(gtd)
    if labels.ids.shape != h.shape:
        raise DataError(f"{site}: ground truth {labels.ids.shape} does not match image {h.shape}")
    return h, labels


def synth4_protocol(seed=0, **kwargs):
    """:func:`run_protocol` on the ``synth4`` scene generated from ``seed``."""
    h_T, ids = generate_scene(synth4(seed=seed))
    kwargs.setdefault("seed", seed)
    return run_protocol(h_T, LabelRaster(ids, class_names=synth4().class_names), **kwargs)


__all__ = ["CHANNEL_SETS", "SITE_MAX_ITERATIONS", "SITE_REFERENCE", "SITE_TRAIN_PER_CLASS",
           "ProtocolResult",
           "format_sweep", "holdout_mask", "load_site", "run_protocol", "synth4_protocol",
           "window_sweep"]
