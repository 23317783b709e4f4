"""File formats: PFM fields, 8-bit images, masks, raw volumes, JSON and CSV.

Every writer goes through :func:`atomic_write`, so an interrupted run never
leaves a partial file under its final name.
"""

import csv
import hashlib
import io
import json
import os
import re
import tempfile
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .errors import FormatError, InvalidInputError

MISSING = np.inf  # missing ground truth, as in Middlebury PFM files

_IMAGE_MODES = {"1", "L", "P", "RGB", "LA", "RGBA"}


@contextmanager
def atomic_write(path, mode="wb"):
    """Open a temporary sibling of ``path`` and rename it into place on success."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        kwargs = {"newline": ""} if "b" not in mode else {}
        with os.fdopen(fd, mode, **kwargs) as fh:
            yield fh
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


# ---------------------------------------------------------------- PFM

def _read_token(data, pos):
    """Next whitespace-delimited header token and the position after its terminator."""
    m = re.compile(rb"\s*(\S+)(\s)").match(data, pos)
    if m is None:
        raise FormatError("truncated PFM header", pos)
    return m.group(1), m.end()


def parse_pfm(data):
    """Decode a single-channel ``Pf`` PFM from bytes."""
    magic, pos = _read_token(data, 0)
    if magic == b"PF":
        raise FormatError("3-channel PFM ('PF') is not supported; expected 'Pf'", 0)
    if magic != b"Pf":
        raise FormatError(f"bad PFM magic {magic[:8]!r}", 0)
    start = pos
    tok, pos = _read_token(data, pos)
    try:
        width = int(tok)
        start = pos
        tok, pos = _read_token(data, pos)
        height = int(tok)
        start = pos
        tok, pos = _read_token(data, pos)
        scale = float(tok)
    except ValueError:
        raise FormatError(f"bad PFM header field {tok[:16]!r}", start) from None
    if width <= 0 or height <= 0:
        raise FormatError(f"bad PFM dimensions {width}x{height}", start)
    if scale == 0 or not np.isfinite(scale):
        raise FormatError("PFM scale must be finite and nonzero", start)
    dtype = np.dtype("<f4") if scale < 0 else np.dtype(">f4")
    n = width * height * 4
    if len(data) - pos < n:
        raise FormatError(f"truncated PFM payload: need {n} bytes, have {len(data) - pos}",
                          len(data))
    values = np.frombuffer(data, dtype=dtype, count=width * height, offset=pos)
    # rows are stored bottom-up
    return values.reshape(height, width)[::-1].astype(np.float32)


def read_pfm(path):
    """Read a ``Pf`` file as a float32 ``(H, W)`` array; infinities mark missing data."""
    with open(path, "rb") as fh:
        return parse_pfm(fh.read())


def encode_pfm(values):
    values = np.asarray(values)
    if values.ndim != 2:
        raise InvalidInputError("PFM fields must be 2-D")
    out = np.where(np.isnan(values), MISSING, values).astype("<f4")
    h, w = out.shape
    return b"Pf\n%d %d\n-1.0\n" % (w, h) + out[::-1].tobytes()


def write_pfm(values, path):
    """Write a little-endian ``Pf`` file; NaN is stored as the missing sentinel.

    Values are stored as float32, so a float32 field round-trips exactly.
    """
    payload = encode_pfm(values)
    with atomic_write(path) as fh:
        fh.write(payload)


# ---------------------------------------------------------------- images

def read_image(path):
    """Read an 8-bit PGM (P2/P5) or PNG into floats in [0, 1].

    Gray images come back ``(H, W)``, colour ``(H, W, 3)``; alpha is dropped.
    """
    try:
        im = Image.open(path)
        im.load()
    except OSError as exc:
        raise FormatError(f"cannot decode image {os.fspath(path)!r}: {exc}") from exc
    if im.mode not in _IMAGE_MODES:
        raise FormatError(f"unsupported image mode {im.mode!r} in {os.fspath(path)!r}; "
                          "only 8-bit gray or RGB images are accepted")
    if im.mode in ("1", "LA"):
        im = im.convert("L")
    elif im.mode in ("P", "RGBA"):
        im = im.convert("RGB")
    return np.asarray(im, dtype=np.float64) / 255.0


def to_uint8(values, scale=255.0):
    return np.clip(np.floor(np.asarray(values, dtype=float) * scale + 0.5), 0, 255).astype(np.uint8)


def encode_png(array):
    buf = io.BytesIO()
    Image.fromarray(np.asarray(array, dtype=np.uint8)).save(buf, format="PNG")
    return buf.getvalue()


def write_png(array, path):
    """Write a uint8 ``(H, W)`` or ``(H, W, 3)`` array as PNG."""
    payload = encode_png(array)
    with atomic_write(path) as fh:
        fh.write(payload)


def write_image(values, path):
    """Write intensities in [0, 1] as an 8-bit PNG."""
    write_png(to_uint8(values), path)


def write_mask(mask, path):
    write_png(np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8), path)


def read_mask(path):
    """Any nonzero (above mid-gray) pixel is set."""
    values = read_image(path)
    if values.ndim == 3:
        values = values.max(axis=-1)
    return values > 0.5


def disparity_png(disparity, d_max):
    """8-bit rendering of a disparity map; returns the array and the scale used."""
    scale = 255.0 / d_max
    d = np.where(np.isfinite(disparity), disparity, 0.0)
    return to_uint8(d, scale), scale


def boundary_overlay(image, phi):
    """The reference image in gray with the zero crossing of ``phi`` in red."""
    gray = np.asarray(image, dtype=float)
    if gray.ndim == 3:
        gray = gray.mean(axis=-1)
    rgb = np.repeat(to_uint8(gray)[..., None], 3, axis=-1)
    fg = phi > 0
    edge = np.zeros_like(fg)
    edge[:, 1:] |= fg[:, 1:] != fg[:, :-1]
    edge[1:, :] |= fg[1:, :] != fg[:-1, :]
    rgb[edge] = (255, 0, 0)
    return rgb


# ---------------------------------------------------------------- volumes, json, csv

def write_raw_volume(values, path):
    """Little-endian float32 bytes in C order; the shape belongs in a sidecar."""
    with atomic_write(path) as fh:
        fh.write(np.ascontiguousarray(values, dtype="<f4").tobytes())


def read_raw_volume(path, shape):
    data = np.fromfile(path, dtype="<f4")
    if data.size != int(np.prod(shape)):
        raise FormatError(f"raw volume {os.fspath(path)!r} holds {data.size} values, "
                          f"expected {int(np.prod(shape))}", data.size * 4)
    return data.reshape(shape)


def write_json(obj, path):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    with atomic_write(path, "w") as fh:
        fh.write(text)


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def write_csv(rows, path, header):
    with atomic_write(path, "w") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([r[k] for k in header])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------- scenes

def left_to_cyclopean(gt_left):
    """Convert a left-view disparity map to cyclopean coordinates.

    A left pixel ``u`` with left-right disparity ``D`` sits at cyclopean
    ``x = u - D / 2`` with cyclopean disparity ``D / 2``. Samples are assigned
    to the nearest column; where several land on one pixel the larger
    disparity (nearer surface) wins. Unfilled pixels are missing.

    Returns the field and a small report of the conversion.
    """
    gt_left = np.asarray(gt_left, dtype=float)
    h, w = gt_left.shape
    out = np.full((h, w), -np.inf)
    counts = np.zeros((h, w), dtype=np.intp)
    yy, uu = np.nonzero(np.isfinite(gt_left))
    half = gt_left[yy, uu] / 2.0
    x = np.floor(uu - half + 0.5).astype(np.intp)
    inside = (x >= 0) & (x < w)
    yy, x, half = yy[inside], x[inside], half[inside]
    np.maximum.at(out, (yy, x), half)
    np.add.at(counts, (yy, x), 1)
    out[~np.isfinite(out)] = MISSING
    report = {
        "source_pixels": int(np.isfinite(gt_left).sum()),
        "dropped_outside": int((~inside).sum()),
        "conflicts": int(np.maximum(counts - 1, 0).sum()),
        "holes": int((counts == 0).sum()),
    }
    return out, report


@dataclass
class SceneBundle:
    """An image pair with optional cyclopean ground truth and provenance."""

    left: np.ndarray
    right: np.ndarray
    gt_disparity: np.ndarray = None
    gt_boundary: np.ndarray = None
    gt_occlusion: np.ndarray = None
    paths: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        shape = self.left.shape[:2]
        if self.right.shape != self.left.shape:
            raise InvalidInputError("left and right images differ in shape")
        for name in ("gt_disparity", "gt_boundary", "gt_occlusion"):
            v = getattr(self, name)
            if v is not None and v.shape != shape:
                raise InvalidInputError(f"{name} shape {v.shape} does not match images {shape}")


def load_scene(left, right, gt_disparity=None, gt_boundary=None, gt_occlusion=None,
               gt_view="cyclopean"):
    """Read a scene from files; left-view ground truth is converted to cyclopean."""
    if gt_view not in ("cyclopean", "left"):
        raise InvalidInputError(f"gt_view must be 'cyclopean' or 'left', got {gt_view!r}")
    paths = {"left": os.fspath(left), "right": os.fspath(right)}
    meta = {}
    gt = bnd = occ = None
    if gt_disparity is not None:
        paths["gt_disparity"] = os.fspath(gt_disparity)
        gt = read_pfm(gt_disparity).astype(np.float64)
        if gt_view == "left":
            gt, meta["gt_conversion"] = left_to_cyclopean(gt)
    if gt_boundary is not None:
        paths["gt_boundary"] = os.fspath(gt_boundary)
        bnd = read_mask(gt_boundary)
    if gt_occlusion is not None:
        paths["gt_occlusion"] = os.fspath(gt_occlusion)
        occ = read_mask(gt_occlusion)
    return SceneBundle(read_image(left), read_image(right), gt, bnd, occ, paths, meta)
