"""Random-dot figure-ground stereo scenes with exact ground truth."""

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import InvalidInputError
from .geometry import ShapeModel
from .signals import ImagePair


@dataclass(frozen=True)
class Ellipse:
    cx: float
    cy: float
    a: float
    b: float

    def mask(self, height, width):
        yy, xx = np.mgrid[0:height, 0:width]
        return ((xx - self.cx) / self.a) ** 2 + ((yy - self.cy) / self.b) ** 2 <= 1.0

    def bounds(self):
        return self.cx - self.a, self.cx + self.a, self.cy - self.b, self.cy + self.b


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned rectangle with inclusive pixel bounds."""

    x0: int
    y0: int
    x1: int
    y1: int

    def mask(self, height, width):
        m = np.zeros((height, width), dtype=bool)
        m[self.y0:self.y1 + 1, self.x0:self.x1 + 1] = True
        return m

    def bounds(self):
        return self.x0, self.x1, self.y0, self.y1


@dataclass(frozen=True)
class SyntheticScene:
    pair: ImagePair
    gt_disparity: np.ndarray
    gt_occlusion: np.ndarray
    gt_boundary: np.ndarray
    fg_mask: np.ndarray
    fg_shape: ShapeModel
    bg_shape: ShapeModel


def _round(x):
    return np.floor(x + 0.5).astype(np.intp)


def _invert_warp(shape, u, rows, sign, iterations=40):
    """Cyclopean x solving ``x + sign * shape(x, y) = u``."""
    x = u - sign * shape(u, rows)
    for _ in range(iterations):
        x = u - sign * shape(x, rows)
    return x


def _lookup_mask(mask, rows, x):
    h, w = mask.shape
    xi = _round(x)
    inside = (xi >= 0) & (xi < w)
    out = np.zeros(np.broadcast(rows, x).shape, dtype=bool)
    rows_b = np.broadcast_to(rows, out.shape)
    out[inside] = mask[rows_b[inside], xi[inside]]
    return out


def _sample_texture(texture, rows, x, pad):
    """Linear interpolation of ``texture`` rows at real-valued cyclopean x."""
    xp = np.clip(x + pad, 0, texture.shape[1] - 1)
    x0 = np.minimum(np.floor(xp).astype(np.intp), texture.shape[1] - 2)
    t = (xp - x0)[..., None]
    rows_b = np.broadcast_to(rows, xp.shape)
    return (1 - t) * texture[rows_b, x0] + t * texture[rows_b, x0 + 1]


def generate_scene(width, height, d_fg, d_bg, fg_mask_spec, texture_seed, d_max=None,
                   fg_shape=None, bg_shape=None, channels=1):
    """Render a two-layer random-dot stereo pair.

    Each layer carries its own seeded uniform-noise texture in cyclopean
    coordinates. A view pixel ``u`` shows the foreground when the inverse
    warp ``x + s * d(x) = u`` (``s = +1`` left, ``-1`` right) lands on the
    foreground mask, and the background otherwise. Occlusion ground truth
    marks background pixels hidden by the foreground in either view.

    ``fg_shape``/``bg_shape`` override the constant disparities ``d_fg`` and
    ``d_bg`` with quadratic surfaces (``d_fg``/``d_bg`` then only bound the
    margin check and ``d_max``).
    """
    if not 0 <= d_bg <= d_fg:
        raise InvalidInputError(f"need 0 <= d_bg <= d_fg, got d_bg={d_bg}, d_fg={d_fg}")
    if d_max is None:
        d_max = int(math.ceil(d_fg)) + 4
    if d_fg > d_max:
        raise InvalidInputError(f"d_fg={d_fg} exceeds d_max={d_max}")
    x_lo, x_hi, y_lo, y_hi = fg_mask_spec.bounds()
    if (x_lo < d_fg or y_lo < d_fg or x_hi > width - 1 - d_fg or y_hi > height - 1 - d_fg):
        raise InvalidInputError("foreground mask must stay at least d_fg pixels from the border")
    fg_shape = fg_shape if fg_shape is not None else ShapeModel.constant(d_fg)
    bg_shape = bg_shape if bg_shape is not None else ShapeModel.constant(d_bg)

    fg_mask = fg_mask_spec.mask(height, width)
    if not fg_mask.any():
        raise InvalidInputError("foreground mask is empty")
    t_fg = fg_shape.grid(height, width)
    t_bg = bg_shape.grid(height, width)
    if np.any(t_fg[fg_mask] <= t_bg[fg_mask]) and d_fg != d_bg:
        raise InvalidInputError("foreground disparity must exceed background on the mask")

    rng = np.random.default_rng(texture_seed)
    pad = int(math.ceil(d_max)) + 2
    tex_fg = rng.random((height, width + 2 * pad, channels))
    tex_bg = rng.random((height, width + 2 * pad, channels))

    rows = np.arange(height)[:, None].astype(float)
    irows = np.arange(height)[:, None]
    u = np.broadcast_to(np.arange(width, dtype=float)[None, :], (height, width))
    views = []
    for sign in (1.0, -1.0):
        x_fg = _invert_warp(fg_shape, u, rows, sign)
        x_bg = _invert_warp(bg_shape, u, rows, sign)
        shows_fg = _lookup_mask(fg_mask, irows, x_fg)
        image = np.where(shows_fg[..., None],
                         _sample_texture(tex_fg, irows, x_fg, pad),
                         _sample_texture(tex_bg, irows, x_bg, pad))
        views.append(image[..., 0] if channels == 1 else image)

    # a background texel is hidden in a view when that view's pixel shows foreground
    xs = np.broadcast_to(np.arange(width, dtype=float)[None, :], (height, width))
    hidden = np.zeros((height, width), dtype=bool)
    for sign in (1.0, -1.0):
        target = xs + sign * t_bg
        x_fg = _invert_warp(fg_shape, target, rows, sign)
        hidden |= _lookup_mask(fg_mask, irows, x_fg)
    gt_occlusion = hidden & ~fg_mask

    gt_boundary = fg_mask & ~ndimage.binary_erosion(fg_mask, border_value=1)
    gt_disparity = np.where(fg_mask, t_fg, t_bg)
    pair = ImagePair(views[0], views[1], d_max)
    return SyntheticScene(pair, gt_disparity, gt_occlusion, gt_boundary, fg_mask,
                          fg_shape, bg_shape)
