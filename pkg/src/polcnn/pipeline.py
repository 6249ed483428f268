"""
Training-set construction and sliding-window classification.

Class ids are 1-based in label rasters (0 = unlabeled) and 0-based inside the
network; the conversion happens only in :func:`build_dataset` and
:func:`classify_image`. Pixel coordinates are ``(x, y)`` = (column, row).
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .cnn import predict
from .errors import DataError
from .rng import make_rng


@dataclass
class LabelRaster:
    """Per-pixel class ids, shape ``(height, width)``; 0 means unlabeled."""

    ids: np.ndarray
    class_names: list = None

    def __post_init__(self):
        ids = np.asarray(self.ids)
        if ids.ndim != 2 or min(ids.shape) < 1:
            raise DataError("label raster must be a non-empty 2-D array")
        if ids.size and ids.min() < 0:
            raise DataError("class ids must be non-negative")
        if not np.issubdtype(ids.dtype, np.integer):
            if not np.all(ids == np.round(ids)):
                raise DataError("class ids must be integers")
        self.ids = ids.astype(np.int64)

    @property
    def shape(self):
        return self.ids.shape

    @property
    def num_classes(self):
        return int(self.ids.max())

    def counts(self):
        """Pixel count per class id, index 0 = unlabeled."""
        return np.bincount(self.ids.ravel(), minlength=self.num_classes + 1)


@dataclass
class SampleSet:
    """Labeled pixel coordinates drawn from a raster of ``shape``."""

    x: np.ndarray
    y: np.ndarray
    classes: np.ndarray
    shape: tuple
    spec: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.int64)
        self.y = np.asarray(self.y, dtype=np.int64)
        self.classes = np.asarray(self.classes, dtype=np.int64)
        self.shape = tuple(int(v) for v in self.shape)
        if not (self.x.shape == self.y.shape == self.classes.shape):
            raise DataError("sample coordinate arrays differ in length")
        h, w = self.shape
        if len(self.x) and (self.x.min() < 0 or self.x.max() >= w
                            or self.y.min() < 0 or self.y.max() >= h):
            raise DataError("sample coordinates out of bounds")
        if len(self.classes) and self.classes.min() < 1:
            raise DataError("sample class ids must be >= 1")
        flat = self.y * w + self.x
        if len(np.unique(flat)) != len(flat):
            raise DataError("duplicate sample coordinates")

    def __len__(self):
        return len(self.x)

    def subset(self, index):
        index = np.asarray(index, dtype=np.int64)
        return SampleSet(self.x[index], self.y[index], self.classes[index], self.shape,
                         dict(self.spec))

    def per_class(self):
        return {int(c): int(n) for c, n in zip(*np.unique(self.classes, return_counts=True))}


def sample_training_pixels(labels, per_class=None, fraction=None, seed=0, clamp=False):
    """Draw training pixels uniformly without replacement, class by class.

    Exactly one of ``per_class`` (a count) or ``fraction`` (``ceil(fraction *
    class size)`` per class) must be given. With ``clamp`` a class smaller than
    the request contributes all of its pixels and a warning is issued instead
    of raising.
    """
    if (per_class is None) == (fraction is None):
        raise DataError("give exactly one of per_class or fraction")
    if per_class is not None and per_class < 1:
        raise DataError("per_class must be >= 1")
    if fraction is not None and not 0 < fraction < 1:
        raise DataError("fraction must lie in (0, 1)")
    ids = labels.ids
    height, width = ids.shape
    rng = make_rng(seed)
    present = [int(c) for c in np.unique(ids) if c > 0]
    if not present:
        raise DataError("label raster has no labeled pixels")
    chosen = []
    for c in present:
        pool = np.flatnonzero(ids.ravel() == c)
        want = per_class if per_class is not None else math.ceil(fraction * len(pool))
        if want > len(pool):
            name = _class_name(labels, c)
            if not clamp:
                raise DataError(f"class {name} has {len(pool)} labeled pixels, {want} requested")
            warnings.warn(f"class {name}: only {len(pool)} of {want} requested pixels available")
            want = len(pool)
        chosen.append(rng.choice(pool, size=want, replace=False))
    flat = np.concatenate(chosen)
    spec = {"per_class": per_class, "fraction": fraction, "seed": seed}
    return SampleSet(flat % width, flat // width, ids.ravel()[flat], (height, width), spec)


def _class_name(labels, c):
    if labels.class_names and 0 < c <= len(labels.class_names):
        return f"{c} ({labels.class_names[c - 1]})"
    return str(c)


def split_train_validation(samples, ratio=0.5, seed=0):
    """Stratified split; each class gives ``floor(ratio * size)`` to validation."""
    if not 0 < ratio < 1:
        raise DataError("ratio must lie in (0, 1)")
    rng = make_rng(seed)
    train_idx, val_idx = [], []
    for c in np.unique(samples.classes):
        idx = np.flatnonzero(samples.classes == c)
        idx = idx[rng.permutation(len(idx))]
        n_val = int(math.floor(ratio * len(idx)))
        if n_val == 0:
            warnings.warn(f"class {c}: {len(idx)} sample(s), none left for validation")
        val_idx.append(idx[:n_val])
        train_idx.append(idx[n_val:])
    train = samples.subset(np.sort(np.concatenate(train_idx)))
    val = samples.subset(np.sort(np.concatenate(val_idx)))
    return train, val


def _check_scaled(cube):
    if cube.stage != "scaled":
        raise DataError(f"expected a scaled feature cube, got stage {cube.stage!r}")


def _check_window(n):
    if n < 1 or n % 2 == 0:
        raise DataError(f"window must be a positive odd integer, got {n}")


def _padded(cube, n):
    r = n // 2
    return np.pad(cube.data, ((0, 0), (r, r), (r, r)), mode="reflect")


def extract_patch(cube, x, y, n):
    """``(n, n, C)`` window centred on pixel ``(x, y)``.

    Off-image positions are mirror-reflected about the edge pixel, i.e.
    index ``-i`` reads ``i`` and ``D - 1 + i`` reads ``D - 1 - i``.
    """
    _check_scaled(cube)
    _check_window(n)
    height, width = cube.shape
    if not (0 <= x < width and 0 <= y < height):
        raise DataError(f"pixel ({x}, {y}) outside {width}x{height} image")
    r = n // 2
    rows = _reflect_index(np.arange(y - r, y + r + 1), height)
    cols = _reflect_index(np.arange(x - r, x + r + 1), width)
    return cube.data[:, rows[:, None], cols[None, :]].transpose(1, 2, 0)


def _reflect_index(idx, size):
    if size == 1:
        return np.zeros_like(idx)
    period = 2 * (size - 1)
    idx = np.abs(idx) % period
    return np.where(idx >= size, period - idx, idx)


def build_dataset(cube, samples, n):
    """``(patches, classes)`` arrays for ``samples``, classes shifted to 0-based."""
    _check_scaled(cube)
    _check_window(n)
    if tuple(cube.shape) != tuple(samples.shape):
        raise DataError(f"cube {tuple(cube.shape)} and samples {samples.shape} differ in size")
    if len(samples) == 0:
        return np.empty((0, n, n, cube.data.shape[0])), np.empty(0, dtype=np.int64)
    win = sliding_window_view(_padded(cube, n), (n, n), axis=(1, 2))
    patches = win[:, samples.y, samples.x].transpose(1, 2, 3, 0)
    return np.ascontiguousarray(patches), samples.classes - 1


def check_compatible(net, cube, n=None):
    """Raise unless ``cube`` carries the channels (in order) ``net`` expects."""
    _check_scaled(cube)
    expected = net.channel_names
    if expected is not None and tuple(cube.names) != tuple(expected):
        raise DataError(
            f"channel mismatch: model expects {list(expected)}, cube has {list(cube.names)}"
        )
    if cube.data.shape[0] != net.config.input_channels:
        raise DataError(
            f"model expects {net.config.input_channels} channels, cube has {cube.data.shape[0]}"
        )
    if n is not None and n != net.config.window:
        raise DataError(f"window {n} does not match the model's {net.config.window}")


def classify_image(net, cube, n=None, rows_per_chunk=None):
    """Label every pixel from the network output on its centred window.

    Returns ``(pred, scores)``: a LabelRaster with 1-based ids (ties go to
    the lowest class) and the ``(num_classes, H, W)`` score rasters.
    """
    n = net.config.window if n is None else n
    check_compatible(net, cube, n)
    height, width = cube.shape
    win = sliding_window_view(_padded(cube, n), (n, n), axis=(1, 2))
    scores = np.empty((net.config.num_classes, height, width))
    if rows_per_chunk is None:
        rows_per_chunk = max(1, 4096 // width)
    for r0 in range(0, height, rows_per_chunk):
        r1 = min(height, r0 + rows_per_chunk)
        patches = win[:, r0:r1].transpose(1, 2, 3, 4, 0).reshape(-1, n, n, cube.data.shape[0])
        out = predict(net, patches)
        scores[:, r0:r1] = out.T.reshape(-1, r1 - r0, width)
    pred = np.argmax(scores, axis=0) + 1
    return LabelRaster(pred, class_names=_names_for(net)), scores


def _names_for(net):
    return list(getattr(net, "class_names", None) or []) or None


def cross_site_remap(labels, mapping):
    """Many-to-one relabeling.

    ``mapping`` maps source id to target id, or to ``None`` to drop the
    class (it becomes 0). Every nonzero id present must be mapped.
    """
    ids = labels.ids
    present = [int(c) for c in np.unique(ids) if c > 0]
    missing = [c for c in present if c not in mapping]
    if missing:
        raise DataError(f"remap has no entry for class id(s) {missing}")
    lut = np.zeros(max(present + [0]) + 1, dtype=np.int64)
    for src, dst in mapping.items():
        if 0 < src < len(lut):
            lut[src] = 0 if dst is None else int(dst)
    return LabelRaster(lut[ids])
