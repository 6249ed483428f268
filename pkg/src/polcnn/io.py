"""
File formats.

Binary containers (feature cubes, Hermitian and scattering images, models)
share one layout::

    magic      5 ASCII bytes, e.g. b"POLC1" (4-letter kind + format version)
    length     uint32 little-endian, size of the header in bytes
    header     UTF-8 JSON, sorted keys, no whitespace
    payload    little-endian float64 (complex128 for complex images)

Headers are canonical, so equal objects serialize to identical bytes.
Label rasters are binary PGM (P5) and class masks binary PPM (P6).
"""

import csv
import json
import re
import struct

import numpy as np

from .cnn import CnnLayer, CompactCnn, NetworkConfig
from .errors import (BadMagicError, DataError, FormatError, HeaderMismatchError,
                     TruncatedError, VersionError)
from .pipeline import LabelRaster, SampleSet
from .polsar import FeatureCube, HermitianImage, ScatteringImage

VERSION = 1
CUBE, HERMITIAN, SCATTERING, MODEL = "POLC", "POLH", "POLS", "PCNN"
_PREFIX = 9  # magic + header length


def _dump_header(header):
    return json.dumps(header, sort_keys=True, separators=(",", ":"), allow_nan=False).encode()


def _write_container(path, kind, header, payload):
    head = _dump_header(header)
    with open(path, "wb") as fh:
        fh.write(f"{kind}{VERSION}".encode("ascii"))
        fh.write(struct.pack("<I", len(head)))
        fh.write(head)
        fh.write(payload)


def _read_container(path, kinds):
    with open(path, "rb") as fh:
        raw = fh.read()
    magic = raw[:5]
    kind = magic[:4].decode("ascii", "replace")
    if len(magic) < 5 or kind not in kinds:
        raise BadMagicError(f"{path}: bad magic {magic!r}, expected one of "
                            f"{[k + str(VERSION) for k in kinds]}", offset=0)
    if magic[4:5] != str(VERSION).encode():
        raise VersionError(f"{path}: unsupported {kind} format version "
                           f"{magic[4:5].decode('ascii', 'replace')!r}; supported versions: [{VERSION}]",
                           offset=4)
    if len(raw) < _PREFIX:
        raise TruncatedError(_PREFIX, len(raw), offset=len(raw))
    (hlen,) = struct.unpack("<I", raw[5:9])
    if len(raw) < _PREFIX + hlen:
        raise TruncatedError(_PREFIX + hlen, len(raw), offset=len(raw))
    try:
        header = json.loads(raw[_PREFIX:_PREFIX + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: unreadable header: {exc}", offset=_PREFIX) from None
    if not isinstance(header, dict):
        raise FormatError(f"{path}: header is not an object", offset=_PREFIX)
    return kind, header, raw[_PREFIX + hlen:], _PREFIX + hlen


def _payload(path, payload, offset, dtype, count):
    expected = count * np.dtype(dtype).itemsize
    if len(payload) < expected:
        raise TruncatedError(expected, len(payload), offset=offset + len(payload))
    if len(payload) > expected:
        raise HeaderMismatchError(
            f"{path}: payload has {len(payload)} bytes, header implies {expected}",
            offset=offset + expected)
    return np.frombuffer(payload, dtype=dtype).copy()


def _field(header, key, path, kind=int):
    try:
        value = header[key]
    except KeyError:
        raise HeaderMismatchError(f"{path}: header lacks {key!r}", offset=_PREFIX) from None
    if kind is int and (not isinstance(value, int) or value < 0):
        raise HeaderMismatchError(f"{path}: header field {key!r} must be a non-negative integer",
                                  offset=_PREFIX)
    return value


# -- feature cubes --------------------------------------------------------------

def write_cube(cube, path):
    c, h, w = cube.data.shape
    header = {"width": w, "height": h, "channels": c, "stage": cube.stage,
              "names": list(cube.names),
              "scaling": [list(p) for p in cube.scaling] if cube.scaling else None}
    _write_container(path, CUBE, header, cube.data.astype("<f8").tobytes())


def read_cube(path):
    _, header, payload, offset = _read_container(path, (CUBE,))
    w, h, c = (_field(header, k, path) for k in ("width", "height", "channels"))
    names = _field(header, "names", path, list)
    if len(names) != c:
        raise HeaderMismatchError(f"{path}: {len(names)} channel names for {c} channels",
                                  offset=_PREFIX)
    data = _payload(path, payload, offset, "<f8", w * h * c).reshape(c, h, w)
    try:
        return FeatureCube(data, names, stage=header.get("stage", "linear"),
                           scaling=header.get("scaling"))
    except DataError as exc:
        raise HeaderMismatchError(f"{path}: {exc}", offset=_PREFIX) from None


# -- polarimetric images --------------------------------------------------------

_UPPER = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]


def write_hermitian(img, path):
    h, w = img.shape
    planes = np.stack([img.data[..., i, j] for i, j in _UPPER])
    header = {"width": w, "height": h, "basis": img.basis, "entries": ["%d%d" % (i + 1, j + 1) for i, j in _UPPER]}
    _write_container(path, HERMITIAN, header, planes.astype("<c16").tobytes())


def read_hermitian(path):
    _, header, payload, offset = _read_container(path, (HERMITIAN,))
    w, h = _field(header, "width", path), _field(header, "height", path)
    planes = _payload(path, payload, offset, "<c16", 6 * w * h).reshape(6, h, w)
    data = np.zeros((h, w, 3, 3), dtype=np.complex128)
    for plane, (i, j) in zip(planes, _UPPER):
        data[..., i, j] = plane
        if i != j:
            data[..., j, i] = plane.conj()
        else:
            data[..., i, i] = plane.real
    return HermitianImage(data, basis=header.get("basis", "pauli"))


def write_scattering(img, path):
    n, h, w = img.hh.shape
    header = {"width": w, "height": h, "looks": n, "order": ["hh", "hv", "vv"]}
    payload = np.stack([img.hh, img.hv, img.vv]).astype("<c16").tobytes()
    _write_container(path, SCATTERING, header, payload)


def read_scattering(path):
    _, header, payload, offset = _read_container(path, (SCATTERING,))
    w, h, n = (_field(header, k, path) for k in ("width", "height", "looks"))
    data = _payload(path, payload, offset, "<c16", 3 * n * w * h).reshape(3, n, h, w)
    return ScatteringImage(data[0], data[1], data[2])


def read_polarimetric(path):
    """Scattering or Hermitian image, whichever ``path`` holds."""
    with open(path, "rb") as fh:
        kind = fh.read(4).decode("ascii", "replace")
    if kind == SCATTERING:
        return read_scattering(path)
    if kind == HERMITIAN:
        return read_hermitian(path)
    raise BadMagicError(f"{path}: not a scattering ({SCATTERING}) or Hermitian ({HERMITIAN}) file",
                        offset=0)


# -- models ---------------------------------------------------------------------

def _config_dict(cfg):
    return {
        "input_channels": cfg.input_channels,
        "window": cfg.window,
        "cnn_layers": [{"neurons": l.neurons, "kernel": list(l.kernel),
                        "subsample": list(l.subsample)} for l in cfg.cnn_layers],
        "mlp_layers": list(cfg.mlp_layers),
        "num_classes": cfg.num_classes,
        "activation": cfg.activation,
        "seed": cfg.seed,
    }


def _config_from(d):
    layers = tuple(CnnLayer(l["neurons"], tuple(l["kernel"]), tuple(l["subsample"]))
                   for l in d["cnn_layers"])
    return NetworkConfig(d["input_channels"], d["window"], layers, tuple(d["mlp_layers"]),
                         d["num_classes"], d["activation"], d["seed"])


def save_model(net, path):
    header = {
        "config": _config_dict(net.config),
        "window": net.config.window,
        "channel_names": list(net.channel_names) if net.channel_names else None,
        "scaling": [list(p) for p in net.scaling] if net.scaling else None,
        "class_names": list(net.class_names) if net.class_names else None,
    }
    _write_container(path, MODEL, header, net.flat_parameters().astype("<f8").tobytes())


def load_model(path):
    _, header, payload, offset = _read_container(path, (MODEL,))
    try:
        cfg = _config_from(header["config"])
    except (KeyError, TypeError, DataError) as exc:
        raise HeaderMismatchError(f"{path}: bad network config: {exc}", offset=_PREFIX) from None
    n = sum(int(np.prod(ws)) + int(np.prod(bs)) for ws, bs in cfg.layer_shapes())
    theta = _payload(path, payload, offset, "<f8", n)
    net = CompactCnn(cfg, [(np.zeros(ws), np.zeros(bs)) for ws, bs in cfg.layer_shapes()],
                     header.get("channel_names"), header.get("scaling"),
                     header.get("class_names"))
    net.set_flat_parameters(theta)
    return net


# -- netpbm rasters -------------------------------------------------------------

_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n?)*(\S+)")


def _netpbm_header(raw, path, fields):
    pos = 0
    tokens = []
    for _ in range(fields):
        m = _TOKEN.match(raw, pos)
        if not m:
            raise TruncatedError(pos + 1, len(raw), offset=len(raw))
        tokens.append(m.group(1))
        pos = m.end()
    if pos >= len(raw) or not raw[pos:pos + 1].isspace():
        raise FormatError(f"{path}: malformed netpbm header", offset=pos)
    return tokens, pos + 1


def read_labels(path, class_names=None):
    """Binary PGM (P5) label raster; pixel value = class id."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:2] == b"P2":
        raise FormatError(f"{path}: ASCII PGM (P2) is not supported; convert to binary P5",
                          offset=0)
    if raw[:2] != b"P5":
        raise BadMagicError(f"{path}: not a binary PGM (P5) file", offset=0)
    tokens, pos = _netpbm_header(raw, path, 4)
    try:
        w, h, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise FormatError(f"{path}: non-numeric PGM header", offset=2) from None
    if w < 1 or h < 1:
        raise FormatError(f"{path}: bad dimensions {w}x{h}", offset=2)
    if not 0 < maxval <= 65535:
        raise FormatError(f"{path}: maxval {maxval} outside 1..65535", offset=2)
    dtype = np.dtype("u1") if maxval < 256 else np.dtype(">u2")
    expected = w * h * dtype.itemsize
    body = raw[pos:]
    if len(body) < expected:
        raise TruncatedError(expected, len(body), offset=len(raw))
    ids = np.frombuffer(body[:expected], dtype=dtype).reshape(h, w).astype(np.int64)
    if ids.max() > maxval:
        raise FormatError(f"{path}: pixel value exceeds maxval {maxval}", offset=pos)
    return LabelRaster(ids, class_names=class_names)


def write_labels(labels, path):
    ids = np.asarray(getattr(labels, "ids", labels))
    h, w = ids.shape
    top = int(ids.max()) if ids.size else 0
    if top > 65535:
        raise DataError("class ids above 65535 cannot be stored in PGM")
    maxval = 255 if top < 256 else 65535
    dtype = "u1" if maxval == 255 else ">u2"
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n{maxval}\n".encode("ascii"))
        fh.write(ids.astype(dtype).tobytes())


DEFAULT_PALETTE = [
    (0, 0, 0), (0, 0, 255), (255, 0, 0), (0, 160, 0), (255, 255, 0), (0, 255, 255),
    (255, 0, 255), (255, 128, 0), (128, 0, 255), (128, 64, 0), (0, 128, 128),
    (255, 160, 200), (128, 128, 0), (160, 160, 160), (0, 80, 0), (255, 255, 255),
]


def write_mask(pred, path, palette=None):
    """Colour-coded class mask as binary PPM; ``palette[i]`` colours id ``i``."""
    ids = np.asarray(getattr(pred, "ids", pred))
    palette = DEFAULT_PALETTE if palette is None else palette
    pal = np.asarray(palette, dtype=np.int64)
    if pal.ndim != 2 or pal.shape[1] != 3 or pal.min() < 0 or pal.max() > 255:
        raise DataError("palette entries must be (r, g, b) triples in 0..255")
    top = int(ids.max())
    if top >= len(pal):
        raise DataError(f"palette has {len(pal)} entries but class id {top} occurs")
    write_ppm(pal[ids].astype(np.uint8), path)


def write_ppm(rgb, path):
    """8-bit ``(height, width, 3)`` image as binary PPM."""
    rgb = np.asarray(rgb)
    if rgb.ndim != 3 or rgb.shape[2] != 3 or rgb.dtype != np.uint8:
        raise DataError("PPM image must be a uint8 array of shape (height, width, 3)")
    h, w = rgb.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(rgb).tobytes())


def read_ppm(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:2] != b"P6":
        raise BadMagicError(f"{path}: not a binary PPM (P6) file", offset=0)
    tokens, pos = _netpbm_header(raw, path, 4)
    w, h, maxval = (int(t) for t in tokens[1:])
    if maxval != 255:
        raise FormatError(f"{path}: only maxval 255 is supported", offset=2)
    body = raw[pos:pos + w * h * 3]
    if len(body) < w * h * 3:
        raise TruncatedError(w * h * 3, len(body), offset=len(raw))
    return np.frombuffer(body, dtype=np.uint8).reshape(h, w, 3).copy()


def read_palette(path):
    """One ``r g b`` line per class id starting at 0; ``#`` comments allowed."""
    palette = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 3:
                raise DataError(f"{path}:{lineno}: expected 'r g b'")
            palette.append(tuple(int(p) for p in parts))
    return palette


# -- text side files -------------------------------------------------------------

def read_remap(path):
    """Lines ``source_id -> target_id`` or ``source_id -> drop``."""
    mapping = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "->" not in line:
                raise DataError(f"{path}:{lineno}: expected 'source -> target'")
            src, dst = (s.strip() for s in line.split("->", 1))
            try:
                mapping[int(src)] = None if dst.lower() == "drop" else int(dst)
            except ValueError:
                raise DataError(f"{path}:{lineno}: ids must be integers or 'drop'") from None
    return mapping


def write_samples(samples, path):
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["x", "y", "class"])
        out.writerows(zip(samples.x.tolist(), samples.y.tolist(), samples.classes.tolist()))


def read_samples(path, shape):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    try:
        x = [int(r["x"]) for r in rows]
        y = [int(r["y"]) for r in rows]
        c = [int(r["class"]) for r in rows]
    except (KeyError, ValueError) as exc:
        raise DataError(f"{path}: expected integer columns x,y,class ({exc})") from None
    return SampleSet(x, y, c, shape)


def write_history(history, path):
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["epoch", "train_mse", "learning_rate", "next_learning_rate", "val_accuracy"])
        for row in history.rows():
            out.writerow([row[0]] + [repr(float(v)) for v in row[1:]])


def _csv_value(v):
    return "NA" if np.isnan(v) else repr(float(v))


def write_metrics(cm, stats, path):
    """Counts matrix, then the overall/producer/user rows, full precision."""
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow([""] + list(cm.class_names))
        for name, row in zip(cm.class_names, cm.counts):
            out.writerow([name] + row.tolist())
        out.writerow(["overall", _csv_value(stats.overall)])
        out.writerow(["producer"] + [_csv_value(v) for v in stats.producer])
        out.writerow(["user"] + [_csv_value(v) for v in stats.user])
        if cm.rejected.any():
            out.writerow(["rejected"] + cm.rejected.tolist())
