"""
Polarimetric channel extraction.

Turns complex scattering matrices into the real-valued EM channel cubes fed
to the classifier: Pauli/lexicographic target vectors, multilook coherency
and covariance matrices, span, boxcar multilooking, the dB transform and the
per-channel linear scaling onto [-1, 1].

Arrays follow a row-major (height, width) raster convention throughout.
Hermitian images are held in memory as full ``(H, W, 3, 3)`` complex arrays.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DataError

SQRT2 = np.sqrt(2.0)

CHANNEL_SETS = {
    "T3": ("T11", "T22", "T33"),
    "T3_SPAN": ("T11", "T22", "T33", "span"),
    "T3_C3": ("T11", "T22", "T33", "C11", "C22", "C33"),
}

STAGES = ("linear", "db", "scaled")

# Omega = PAULI_TO_LEX @ k for the same scattering matrix.
PAULI_TO_LEX = np.array(
    [[1 / SQRT2, 1 / SQRT2, 0.0], [0.0, 0.0, 1.0], [1 / SQRT2, -1 / SQRT2, 0.0]],
    dtype=np.complex128,
)


@dataclass(frozen=True)
class ScatteringImage:
    """Single- or multi-look monostatic scattering matrices.

    ``hh``, ``hv`` and ``vv`` have shape ``(n_looks, height, width)``.
    Reciprocity is assumed, so ``hv`` stands for both cross-pol terms.
    """

    hh: np.ndarray
    hv: np.ndarray
    vv: np.ndarray

    def __post_init__(self):
        arrays = []
        for name in ("hh", "hv", "vv"):
            a = np.asarray(getattr(self, name), dtype=np.complex128)
            if a.ndim == 2:
                a = a[None]
            if a.ndim != 3 or a.shape[0] < 1:
                raise DataError(f"{name} must have shape (looks, height, width)")
            if not np.all(np.isfinite(a)):
                raise DataError(f"{name} contains non-finite values")
            object.__setattr__(self, name, a)
            arrays.append(a)
        if not (arrays[0].shape == arrays[1].shape == arrays[2].shape):
            raise DataError("all look planes must share dimensions")

    @property
    def looks(self):
        return self.hh.shape[0]

    @property
    def shape(self):
        return self.hh.shape[1:]


@dataclass(frozen=True)
class HermitianImage:
    """Per-pixel 3x3 Hermitian matrices, shape ``(height, width, 3, 3)``."""

    data: np.ndarray
    basis: str = "pauli"

    def __post_init__(self):
        a = np.asarray(self.data, dtype=np.complex128)
        if a.ndim != 4 or a.shape[2:] != (3, 3):
            raise DataError("Hermitian image must have shape (height, width, 3, 3)")
        object.__setattr__(self, "data", a)

    @property
    def shape(self):
        return self.data.shape[:2]

    def diagonal(self, i):
        return self.data[..., i, i].real.copy()

    def trace(self):
        return np.trace(self.data, axis1=2, axis2=3).real


@dataclass(frozen=True)
class FeatureCube:
    """Real multi-channel raster.

    ``data`` has shape ``(channels, height, width)``; ``scaling`` holds one
    ``(min_db, max_db)`` pair per channel once the cube is scaled.
    """

    data: np.ndarray
    names: tuple
    stage: str = "linear"
    scaling: Optional[tuple] = None

    def __post_init__(self):
        a = np.asarray(self.data, dtype=np.float64)
        names = tuple(str(n) for n in self.names)
        if a.ndim != 3:
            raise DataError("feature cube must have shape (channels, height, width)")
        if a.shape[0] != len(names):
            raise DataError(f"{a.shape[0]} planes but {len(names)} channel names")
        if len(set(names)) != len(names):
            raise DataError(f"duplicate channel names: {names}")
        if self.stage not in STAGES:
            raise DataError(f"unknown stage {self.stage!r}")
        scaling = self.scaling
        if scaling is not None:
            scaling = tuple((float(lo), float(hi)) for lo, hi in scaling)
            if len(scaling) != len(names):
                raise DataError("scaling record must cover every channel")
        if self.stage == "scaled":
            if scaling is None:
                raise DataError("scaled cube requires a scaling record")
            if a.size and (a.min() < -1.0 or a.max() > 1.0):
                raise DataError("scaled cube values must lie in [-1, 1]")
        object.__setattr__(self, "data", a)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "scaling", scaling)

    @property
    def shape(self):
        return self.data.shape[1:]

    def channel(self, name):
        return self.data[self.names.index(name)]


def pauli_vector(hh, hv, vv):
    """Pauli scattering vector ``[hh + vv, hh - vv, 2 hv] / sqrt(2)``.

    Inputs broadcast; the vector components land on a new trailing axis.
    """
    hh, hv, vv = (np.asarray(v, dtype=np.complex128) for v in (hh, hv, vv))
    return np.stack([hh + vv, hh - vv, 2.0 * hv], axis=-1) / SQRT2


def lexicographic_vector(hh, hv, vv):
    """Lexicographic scattering vector ``[hh, sqrt(2) hv, vv]``."""
    hh, hv, vv = (np.asarray(v, dtype=np.complex128) for v in (hh, hv, vv))
    return np.stack(np.broadcast_arrays(hh, SQRT2 * hv, vv), axis=-1)


def span(hh, hv, vv):
    """Total scattering power with the cross-pol term counted twice."""
    hh, hv, vv = (np.asarray(v, dtype=np.complex128) for v in (hh, hv, vv))
    return np.abs(hh) ** 2 + 2.0 * np.abs(hv) ** 2 + np.abs(vv) ** 2


def second_order_average(vectors):
    """Average of outer products ``v v^H`` over the first axis.

    Parameters
    ----------
    vectors : array_like, shape (n, ..., 3)
        ``n`` looks of 3-component complex vectors; any number of pixel
        axes may sit between the look axis and the component axis.

    Returns
    -------
    ndarray, shape (..., 3, 3)
    """
    v = np.asarray(vectors, dtype=np.complex128)
    if v.ndim < 2 or v.shape[0] == 0:
        raise DataError("no looks")
    if not np.all(np.isfinite(v)):
        raise DataError("non-finite scattering vector")
    n = v.shape[0]
    acc = np.zeros(v.shape[1:] + (3,), dtype=np.complex128)
    for i in range(n):
        acc += v[i][..., :, None] * v[i][..., None, :].conj()
    return _hermitian_part(acc / n)


def _hermitian_part(m):
    # mirror the upper triangle so M == M^H holds bit-for-bit, diagonal real
    iu = np.triu_indices(3, 1)
    out = m.copy()
    out[..., iu[1], iu[0]] = m[..., iu[0], iu[1]].conj()
    d = np.arange(3)
    out[..., d, d] = m[..., d, d].real
    return out


def build_hermitian_image(img, basis="pauli"):
    """Multilook coherency (``basis='pauli'``) or covariance matrices."""
    if basis == "pauli":
        vec = pauli_vector(img.hh, img.hv, img.vv)
    elif basis == "lexicographic":
        vec = lexicographic_vector(img.hh, img.hv, img.vv)
    else:
        raise DataError(f"unknown basis {basis!r}")
    return HermitianImage(second_order_average(vec), basis=basis)


def coherency_to_covariance(h_T):
    """Covariance matrices from coherency matrices of the same looks."""
    if h_T.basis != "pauli":
        raise DataError("expected a coherency (pauli basis) image")
    A = PAULI_TO_LEX
    C = A @ h_T.data @ A.conj().T
    return HermitianImage(_hermitian_part(C), basis="lexicographic")


def covariance_to_coherency(h_C):
    """Inverse of :func:`coherency_to_covariance` (the basis change is unitary)."""
    if h_C.basis != "lexicographic":
        raise DataError("expected a covariance (lexicographic basis) image")
    A = PAULI_TO_LEX
    return HermitianImage(_hermitian_part(A.conj().T @ h_C.data @ A), basis="pauli")


def look_span(img):
    """Mean span over looks, shape ``(H, W)``."""
    return span(img.hh, img.hv, img.vv).mean(axis=0)


def _box_mean(a, window):
    # mean over a window x window neighbourhood on the first two axes
    r = window // 2
    widths = [(r, r), (r, r)] + [(0, 0)] * (a.ndim - 2)
    padded = np.pad(a, widths, mode="reflect")
    height, width = a.shape[:2]
    out = np.zeros_like(a)
    for du in range(window):
        for dv in range(window):
            out += padded[du:du + height, dv:dv + width]
    return out / window ** 2


def _check_window(window):
    window = int(window)
    if window < 1 or window % 2 == 0:
        raise DataError(f"boxcar window must be a positive odd integer, got {window}")
    return window


def boxcar_multilook(h, window=5):
    """Boxcar average of Hermitian matrices over a square window.

    Borders are mirror-reflected (the edge pixel is not duplicated), the same
    rule used when extracting classification patches.
    """
    window = _check_window(window)
    if window == 1:
        return HermitianImage(h.data.copy(), basis=h.basis)
    return HermitianImage(_box_mean(h.data, window), basis=h.basis)


def extract_channels(h_T, h_C=None, spans=None, channel_set="T3"):
    """Stack the diagonal intensity channels of ``channel_set`` into a cube."""
    if channel_set not in CHANNEL_SETS:
        raise DataError(f"unknown channel set {channel_set!r}; choose from {sorted(CHANNEL_SETS)}")
    shape = h_T.shape
    planes = [h_T.diagonal(i) for i in range(3)]
    if channel_set == "T3_SPAN":
        if spans is None:
            raise DataError("channel set T3_SPAN requires the span raster")
        spans = np.asarray(spans, dtype=np.float64)
        if spans.shape != tuple(shape):
            raise DataError(f"span raster {spans.shape} does not match {tuple(shape)}")
        planes.append(spans)
    elif channel_set == "T3_C3":
        if h_C is None:
            raise DataError("channel set T3_C3 requires the covariance image")
        if tuple(h_C.shape) != tuple(shape):
            raise DataError(f"covariance image {tuple(h_C.shape)} does not match {tuple(shape)}")
        planes.extend(h_C.diagonal(i) for i in range(3))
    return FeatureCube(np.stack(planes), CHANNEL_SETS[channel_set], stage="linear")


def db_transform(cube, floor_eps=1e-15):
    """``10 log10(max(v, floor_eps))`` applied to every value."""
    if cube.stage != "linear":
        raise DataError(f"dB transform expects a linear cube, got stage {cube.stage!r}")
    if not floor_eps > 0:
        raise DataError("floor_eps must be positive")
    if np.any(cube.data < 0):
        raise DataError("intensity channels must be non-negative")
    data = 10.0 * np.log10(np.maximum(cube.data, floor_eps))
    return FeatureCube(data, cube.names, stage="db")


def scale_to_unit(cube, scaling=None):
    """Affine map of each channel's [min, max] onto [-1, 1].

    With ``scaling`` given, those stored ranges are used instead of the
    cube's own extrema, so a model trained on one image can be applied to
    another. Values falling outside a stored range are clipped.
    """
    if cube.stage != "db":
        raise DataError(f"scaling expects a dB cube, got stage {cube.stage!r}")
    if scaling is None:
        scaling = tuple((float(p.min()), float(p.max())) for p in cube.data)
    elif len(scaling) != len(cube.names):
        raise DataError("scaling record does not match channel count")
    out = np.empty_like(cube.data)
    for c, (lo, hi) in enumerate(scaling):
        if hi > lo:
            out[c] = np.clip(2.0 * (cube.data[c] - lo) / (hi - lo) - 1.0, -1.0, 1.0)
        else:
            out[c] = 0.0
    return FeatureCube(out, cube.names, stage="scaled", scaling=scaling)


def unscale(cube):
    """Inverse of :func:`scale_to_unit` using the stored scaling record."""
    if cube.stage != "scaled":
        raise DataError("unscale expects a scaled cube")
    out = np.empty_like(cube.data)
    for c, (lo, hi) in enumerate(cube.scaling):
        out[c] = (cube.data[c] + 1.0) * (hi - lo) / 2.0 + lo
    return FeatureCube(out, cube.names, stage="db")


def preprocess(cube, floor_eps=1e-15, scaling=None):
    """dB transform followed by unit scaling."""
    return scale_to_unit(db_transform(cube, floor_eps), scaling=scaling)


def features_from_coherency(h_T, channel_set="T3", boxcar=0, floor_eps=1e-15, scaling=None):
    """Full channel path for coherency-matrix input.

    Covariance diagonals and span are derived from ``h_T`` itself, which is
    exact when both descend from the same looks.
    """
    if boxcar:
        h_T = boxcar_multilook(h_T, boxcar)
    h_C = coherency_to_covariance(h_T) if channel_set == "T3_C3" else None
    spans = h_T.trace() if channel_set == "T3_SPAN" else None
    cube = extract_channels(h_T, h_C, spans, channel_set)
    return preprocess(cube, floor_eps, scaling)


def features_from_scattering(img, channel_set="T3", boxcar=0, floor_eps=1e-15, scaling=None):
    h_T = build_hermitian_image(img, "pauli")
    h_C = build_hermitian_image(img, "lexicographic") if channel_set == "T3_C3" else None
    spans = look_span(img) if channel_set == "T3_SPAN" else None
    if boxcar:
        h_T = boxcar_multilook(h_T, boxcar)
        if h_C is not None:
            h_C = boxcar_multilook(h_C, boxcar)
        if spans is not None:
            spans = _box_mean(spans, _check_window(boxcar))
    cube = extract_channels(h_T, h_C, spans, channel_set)
    return preprocess(cube, floor_eps, scaling)


def pauli_rgb(h_T, low=1.0, high=99.0):
    """8-bit Pauli composite: R = |T22|, G = |T33|, B = |T11| amplitudes.

    Each amplitude is put on a dB scale; the clip limits are the ``low`` and
    ``high`` percentiles of the three channels pooled together, so relative
    channel strength survives into the colour.
    """
    amps = [np.sqrt(np.maximum(h_T.diagonal(i), 0.0)) for i in (1, 2, 0)]
    db = np.stack([20.0 * np.log10(np.maximum(a, 1e-15)) for a in amps], axis=-1)
    lo, hi = np.percentile(db, [low, high])
    if hi <= lo:
        return np.full(db.shape, 128, dtype=np.uint8)
    scaled = np.clip((db - lo) / (hi - lo), 0.0, 1.0)
    return np.round(scaled * 255.0).astype(np.uint8)
