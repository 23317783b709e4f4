"""Matching and boundary cost volumes.

All volumes are stored as ``(height, width, d_max + 1)`` float arrays indexed
``[y, x, d]`` in cyclopean coordinates: disparity ``d`` at ``(x, y)`` pairs the
left-image pixel ``x + d`` with the right-image pixel ``x - d``.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import InvalidInputError

MATCHING = "matching"
MONOCULAR_BOUNDARY = "monocular-boundary"
OCCLUSION_BOUNDARY = "occlusion-boundary"

# Sobel magnitude of a unit step is 4; these defaults suit [0, 1] intensities
EDGE_THRESHOLD = 1.0
OCCLUSION_THRESHOLD = 0.015
OCCLUSION_SMOOTHING = (1.0, 6.0)


@dataclass(frozen=True)
class ImagePair:
    """Rectified stereo pair with intensities in [0, 1].

    Images are ``(H, W)`` for grayscale or ``(H, W, channels)``.
    """

    left: np.ndarray
    right: np.ndarray
    d_max: int

    def __post_init__(self):
        left = np.asarray(self.left, dtype=float)
        right = np.asarray(self.right, dtype=float)
        if left.shape != right.shape:
            raise InvalidInputError(
                f"left {left.shape} and right {right.shape} images differ in shape")
        if left.ndim not in (2, 3):
            raise InvalidInputError("images must be 2-D or 3-D arrays")
        if int(self.d_max) != self.d_max or self.d_max < 1:
            raise InvalidInputError(f"d_max must be a positive integer, got {self.d_max}")
        if not self.d_max < left.shape[1] / 2:
            raise InvalidInputError(
                f"d_max={self.d_max} must be below half the image width {left.shape[1]}")
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)
        object.__setattr__(self, "d_max", int(self.d_max))

    @property
    def shape(self):
        return self.left.shape[:2]

    def channels(self):
        """Both images as ``(H, W, C)`` arrays."""
        if self.left.ndim == 2:
            return self.left[:, :, None], self.right[:, :, None]
        return self.left, self.right

    def swapped(self):
        return ImagePair(self.right, self.left, self.d_max)


@dataclass(frozen=True)
class CostVolume:
    values: np.ndarray
    kind: str

    @property
    def d_max(self):
        return self.values.shape[2] - 1

    @property
    def shape(self):
        return self.values.shape


def normalize_unit(values):
    """Linearly map ``values`` onto [0, 1]; a constant array maps to zeros."""
    values = np.asarray(values, dtype=float)
    lo, hi = values.min(), values.max()
    if hi - lo <= 0:
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


def _shifted_columns(width, shift):
    return np.clip(np.arange(width) + shift, 0, width - 1)


def build_matching_cost(pair):
    """Sum over channels of ``|I_l(x+d, y) - I_r(x-d, y)|``, normalized.

    Lookups outside the image replicate the border column.
    """
    left, right = pair.channels()
    h, w, _ = left.shape
    raw = np.empty((h, w, pair.d_max + 1))
    for d in range(pair.d_max + 1):
        xl = _shifted_columns(w, d)
        xr = _shifted_columns(w, -d)
        raw[:, :, d] = np.abs(left[:, xl, :] - right[:, xr, :]).sum(axis=-1)
    return CostVolume(normalize_unit(raw), MATCHING)


def sobel_magnitude(image):
    image = np.asarray(image, dtype=float)
    if image.ndim == 3:
        image = image.mean(axis=-1)
    gx = ndimage.sobel(image, axis=1, mode="nearest")
    gy = ndimage.sobel(image, axis=0, mode="nearest")
    return np.hypot(gx, gy)


def edge_distance(image, edge_threshold):
    """Euclidean distance (pixels) to the nearest thresholded Sobel edge.

    With no edge above threshold the field is the image diagonal everywhere.
    """
    if not edge_threshold > 0:
        raise InvalidInputError("edge_threshold must be positive")
    edges = sobel_magnitude(image) > edge_threshold
    h, w = edges.shape
    if not edges.any():
        warnings.warn("no monocular edges above threshold; edge distance is constant",
                      RuntimeWarning, stacklevel=2)
        return np.full((h, w), float(np.hypot(h, w)))
    return ndimage.distance_transform_edt(~edges)


def combine_edge_distances(e_left, e_right, d_max):
    """Unnormalized ``B_m(x, y, d) = E_l(x + d, y) + E_r(x - d, y)``."""
    h, w = e_left.shape
    raw = np.empty((h, w, d_max + 1))
    for d in range(d_max + 1):
        raw[:, :, d] = e_left[:, _shifted_columns(w, d)] + e_right[:, _shifted_columns(w, -d)]
    return raw


def build_monocular_boundary_cost(pair, edge_threshold=EDGE_THRESHOLD):
    e_left = edge_distance(pair.left, edge_threshold)
    e_right = edge_distance(pair.right, edge_threshold)
    raw = combine_edge_distances(e_left, e_right, pair.d_max)
    return CostVolume(normalize_unit(raw), MONOCULAR_BOUNDARY)


def epipolar_gradient(values):
    """Central difference along x with replicate padding."""
    w = values.shape[1]
    return 0.5 * (values[:, _shifted_columns(w, 1)] - values[:, _shifted_columns(w, -1)])


def detect_occlusion_boundaries(matching, gradient_threshold, smoothing=OCCLUSION_SMOOTHING,
                                thin=True):
    """Boolean volume of sharp transitions of matching cost along scanlines.

    ``smoothing`` is the Gaussian sigma ``(sigma_y, sigma_x)`` (or one value
    for both) applied to each disparity slice before differentiation; zero
    disables it. Per-pixel absolute differences of random texture are too
    noisy to threshold directly, and a wide kernel along the scanline keeps
    the step location while averaging the noise. With ``thin`` only local
    maxima of the gradient magnitude along x are kept.
    """
    values = matching.values
    sy, sx = np.broadcast_to(np.asarray(smoothing, dtype=float), (2,))
    if sy > 0 or sx > 0:
        # reflect: replicating a single noisy border column would fake a step there
        values = ndimage.gaussian_filter(values, sigma=(sy, sx, 0), mode="reflect")
    mag = np.abs(epipolar_gradient(values))
    detected = mag > gradient_threshold
    if thin:
        w = mag.shape[1]
        detected &= mag >= mag[:, _shifted_columns(w, -1)]
        detected &= mag >= mag[:, _shifted_columns(w, 1)]
    return detected


def build_occlusion_boundary_cost(matching, gradient_threshold=OCCLUSION_THRESHOLD,
                                  smoothing=OCCLUSION_SMOOTHING, thin=True):
    if matching.kind != MATCHING:
        raise InvalidInputError(f"expected a matching cost volume, got {matching.kind!r}")
    if not gradient_threshold > 0:
        raise InvalidInputError("gradient_threshold must be positive")
    detected = detect_occlusion_boundaries(matching, gradient_threshold, smoothing, thin)
    if not detected.any():
        warnings.warn("no occlusion boundaries above threshold; B_o is constant",
                      RuntimeWarning, stacklevel=2)
        return CostVolume(np.zeros(detected.shape), OCCLUSION_BOUNDARY)
    raw = ndimage.distance_transform_edt(~detected)
    return CostVolume(normalize_unit(raw), OCCLUSION_BOUNDARY)


def sample_volume(values, disparity, columns=None):
    """Read ``values[y, x, d]`` at real-valued disparities (and columns).

    Linear interpolation along d (and x when ``columns`` is given);
    arguments outside the volume are clamped to its border.
    """
    h, w, nd = values.shape
    d = np.clip(np.asarray(disparity, dtype=float), 0, nd - 1)
    d0 = np.minimum(np.floor(d).astype(np.intp), nd - 2)
    td = d - d0
    rows = np.arange(h)[:, None]
    if columns is None:
        cols = np.arange(w)[None, :]
        return (1 - td) * values[rows, cols, d0] + td * values[rows, cols, d0 + 1]
    x = np.clip(np.asarray(columns, dtype=float), 0, w - 1)
    x0 = np.minimum(np.floor(x).astype(np.intp), w - 2)
    tx = x - x0
    near = (1 - td) * values[rows, x0, d0] + td * values[rows, x0, d0 + 1]
    far = (1 - td) * values[rows, x0 + 1, d0] + td * values[rows, x0 + 1, d0 + 1]
    return (1 - tx) * near + tx * far
