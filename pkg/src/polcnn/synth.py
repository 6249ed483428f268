"""
Synthetic PolSAR scenes under the complex Wishart clutter model.

Each pixel's looks are circular complex Gaussian Pauli vectors ``k = L z``
drawn from its class covariance (``L`` the lower Cholesky factor); the
multilook coherency matrix is the average of their outer products. Regions
are painted in declaration order over an optional background class, so a
later region overrides an earlier one where they overlap.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .polsar import HermitianImage, second_order_average
from .rng import circular_complex_normal, make_rng


@dataclass(frozen=True)
class Rect:
    """Half-open pixel rectangle ``[x0, x1) x [y0, y1)``."""

    x0: int
    y0: int
    x1: int
    y1: int

    def mask(self, height, width):
        yy, xx = np.mgrid[0:height, 0:width]
        return (xx >= self.x0) & (xx < self.x1) & (yy >= self.y0) & (yy < self.y1)


@dataclass(frozen=True)
class Disk:
    cx: float
    cy: float
    r: float

    def mask(self, height, width):
        yy, xx = np.mgrid[0:height, 0:width]
        return (xx - self.cx) ** 2 + (yy - self.cy) ** 2 <= self.r ** 2


@dataclass
class SceneSpec:
    width: int
    height: int
    class_models: dict
    regions: list = field(default_factory=list)
    looks: int = 4
    seed: int = 0
    background: int = 0
    class_names: list = None

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise DataError("scene dimensions must be positive")
        if self.looks < 1:
            raise DataError("looks must be >= 1")
        models = {}
        for c, sigma in self.class_models.items():
            if int(c) < 1:
                raise DataError(f"class ids must be >= 1, got {c}")
            models[int(c)] = check_psd(sigma)
        self.class_models = models
        for _, c in self.regions:
            if int(c) not in models:
                raise DataError(f"region uses class {c} without a covariance model")
        if self.background and self.background not in models:
            raise DataError(f"background class {self.background} has no covariance model")

    def label_raster(self):
        labels = np.full((self.height, self.width), self.background, dtype=np.int64)
        for shape, c in self.regions:
            labels[shape.mask(self.height, self.width)] = c
        if np.any(labels == 0):
            y, x = np.argwhere(labels == 0)[0]
            raise DataError(f"pixel (x={x}, y={y}) is not covered by any region")
        return labels


def check_psd(sigma, tol=1e-12):
    sigma = np.asarray(sigma, dtype=np.complex128)
    if sigma.shape != (3, 3):
        raise DataError("covariance must be 3x3")
    if np.max(np.abs(sigma - sigma.conj().T)) > tol * max(1.0, np.abs(sigma).max()):
        raise DataError("covariance is not Hermitian")
    w = np.linalg.eigvalsh(sigma)
    if w.min() < -tol * max(1.0, w.max()):
        raise DataError(f"covariance is not positive semidefinite (eigenvalue {w.min():.3g})")
    return sigma


def psd_cholesky(sigma):
    """Lower-triangular ``L`` with ``L L^H = sigma``, tolerating zero pivots."""
    sigma = check_psd(sigma)
    n = sigma.shape[0]
    L = np.zeros_like(sigma)
    scale = max(np.abs(np.diag(sigma)).max(), 1e-300)
    for j in range(n):
        d = sigma[j, j].real - np.sum(np.abs(L[j, :j]) ** 2)
        if d <= 1e-14 * scale:
            continue
        L[j, j] = np.sqrt(d)
        for i in range(j + 1, n):
            L[i, j] = (sigma[i, j] - np.sum(L[i, :j] * L[j, :j].conj())) / L[j, j]
    return L


def sample_scattering_vector(sigma, rng, size=()):
    """Draw circular complex Gaussian 3-vectors with covariance ``sigma``.

    Returns shape ``size + (3,)``.
    """
    L = psd_cholesky(sigma)
    z = circular_complex_normal(rng, tuple(size) + (3,))
    return z @ L.T


def generate_scene(spec, return_looks=False):
    """Multilook coherency image and label raster for ``spec``.

    Looks are drawn from one seeded stream in raster order (look-major), so
    the result depends only on ``spec``.
    """
    labels = spec.label_raster()
    rng = make_rng(spec.seed)
    z = circular_complex_normal(rng, (spec.looks, spec.height, spec.width, 3))
    k = np.zeros_like(z)
    for c, sigma in spec.class_models.items():
        m = labels == c
        if m.any():
            k[:, m] = z[:, m] @ psd_cholesky(sigma).T
    T = HermitianImage(second_order_average(k), basis="pauli")
    if return_looks:
        return T, labels, k
    return T, labels


SYNTH4_COVARIANCES = {
    1: np.diag([1.0, 0.1, 0.05]),
    2: np.diag([0.1, 1.0, 0.05]),
    3: np.diag([0.3, 0.3, 0.3]),
    4: np.array([[0.5, 0.2, 0.0], [0.2, 0.5, 0.0], [0.0, 0.0, 0.2]]),
}


def synth4(seed=0, size=256, looks=4):
    """Four-class reference scene.

    Each quadrant is dominated by one class and holds a disk of the next
    class, giving straight and curved boundaries between every class pair.
    """
    h = size // 2
    regions = [
        (Rect(0, 0, h, h), 1),
        (Rect(h, 0, size, h), 2),
        (Rect(0, h, h, size), 3),
        (Rect(h, h, size, size), 4),
    ]
    r = size * 3 / 32
    centres = [(h / 2, h / 2), (h + h / 2, h / 2), (h / 2, h + h / 2), (h + h / 2, h + h / 2)]
    for (cx, cy), c in zip(centres, (2, 3, 4, 1)):
        regions.append((Disk(cx, cy, r), c))
    return SceneSpec(
        width=size,
        height=size,
        class_models=SYNTH4_COVARIANCES,
        regions=regions,
        looks=looks,
        seed=seed,
        class_names=["class1", "class2", "class3", "class4"],
    )


PRESETS = {"synth4": synth4}


def _parse_matrix(text):
    rows = [r.split() for r in text.split(";")]
    return np.array([[complex(v.replace("i", "j")) for v in r] for r in rows])


def parse_scene_spec(text, seed=None):
    """Parse a plain-text scene description.

    Recognised lines (``#`` starts a comment)::

        width = 128
        height = 96
        looks = 4
        seed = 7
        background = 1
        class 1 = 1 0 0 ; 0 0.1 0 ; 0 0 0.05
        rect 2 = x0 y0 x1 y1
        disk 3 = cx cy r
    """
    params = {"looks": 4, "seed": 0, "background": 0}
    models, regions = {}, []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"scene spec line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        parts = key.split()
        try:
            if parts[0] == "class" and len(parts) == 2:
                models[int(parts[1])] = _parse_matrix(value)
            elif parts[0] == "rect" and len(parts) == 2:
                x0, y0, x1, y1 = (int(v) for v in value.split())
                regions.append((Rect(x0, y0, x1, y1), int(parts[1])))
            elif parts[0] == "disk" and len(parts) == 2:
                cx, cy, r = (float(v) for v in value.split())
                regions.append((Disk(cx, cy, r), int(parts[1])))
            elif key in ("width", "height", "looks", "seed", "background"):
                params[key] = int(value)
            else:
                raise DataError(f"scene spec line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, DataError):
                raise
            raise DataError(f"scene spec line {lineno}: {exc}") from None
    for key in ("width", "height"):
        if key not in params:
            raise DataError(f"scene spec is missing {key!r}")
    if seed is not None:
        params["seed"] = seed
    return SceneSpec(class_models=models, regions=regions, **params)
