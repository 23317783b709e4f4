"""Quadratic disparity shapes and the occlusion geometry between two layers."""

from dataclasses import dataclass, field

import numpy as np

IDENTITY_FRAME = (1.0, 0.0, 1.0, 0.0)
N_COEFFS = 6


def normalized_frame(height, width):
    """Affine frame mapping pixel columns/rows onto [-1, 1]."""
    sx = 2.0 / max(width - 1, 1)
    sy = 2.0 / max(height - 1, 1)
    return (sx, -1.0, sy, -1.0)


def basis(xf, yf):
    """Stack of ``(x^2, xy, y^2, x, y, 1)`` along a new last axis."""
    xf, yf = np.broadcast_arrays(np.asarray(xf, dtype=float), np.asarray(yf, dtype=float))
    return np.stack([xf * xf, xf * yf, yf * yf, xf, yf, np.ones_like(xf)], axis=-1)


@dataclass(frozen=True)
class ShapeModel:
    """Quadratic surface ``sum_i coeffs[i] * U_i(x', y')``.

    ``frame = (sx, ox, sy, oy)`` maps pixel coordinates to the fitting frame
    via ``x' = sx * x + ox`` and ``y' = sy * y + oy``.
    """

    coeffs: np.ndarray
    frame: tuple = field(default=IDENTITY_FRAME)

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=float).reshape(N_COEFFS)
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "frame", tuple(float(v) for v in self.frame))

    @classmethod
    def constant(cls, value, frame=IDENTITY_FRAME):
        return cls([0, 0, 0, 0, 0, value], frame)

    def to_frame_coords(self, x, y):
        sx, ox, sy, oy = self.frame
        return sx * np.asarray(x, dtype=float) + ox, sy * np.asarray(y, dtype=float) + oy

    def __call__(self, x, y):
        return basis(*self.to_frame_coords(x, y)) @ self.coeffs

    def grid(self, height, width):
        """Evaluations at every pixel of an ``(height, width)`` image."""
        yy, xx = np.mgrid[0:height, 0:width]
        return self(xx, yy)

    def in_frame(self, frame):
        """Same surface with coefficients re-expressed in another frame."""
        sx, ox, sy, oy = self.frame
        tx, px, ty, py = frame
        # old frame coords as affine functions of the new ones
        ax, bx = sx / tx, ox - sx * px / tx
        ay, by = sy / ty, oy - sy * py / ty
        c = self.coeffs
        new = [
            c[0] * ax * ax,
            c[1] * ax * ay,
            c[2] * ay * ay,
            2 * c[0] * ax * bx + c[1] * ax * by + c[3] * ax,
            c[1] * bx * ay + 2 * c[2] * ay * by + c[4] * ay,
            c[0] * bx * bx + c[1] * bx * by + c[2] * by * by + c[3] * bx + c[4] * by + c[5],
        ]
        return ShapeModel(new, frame)


def x_derivative(field_):
    """Central difference along x with replicate padding."""
    padded = np.pad(field_, ((0, 0), (1, 1)), mode="edge")
    return 0.5 * (padded[:, 2:] - padded[:, :-2])


def sample_shifted(field_, shift):
    """``field(x + shift(x, y), y)`` by linear interpolation, border replicated."""
    h, w = field_.shape
    x = np.clip(np.arange(w)[None, :] + shift, 0, w - 1)
    x0 = np.minimum(np.floor(x).astype(np.intp), w - 2)
    t = x - x0
    rows = np.arange(h)[:, None]
    return (1 - t) * field_[rows, x0] + t * field_[rows, x0 + 1]


def shape_grids(theta1, theta2, shape, d_max=None):
    h, w = shape
    t1, t2 = theta1.grid(h, w), theta2.grid(h, w)
    if d_max is not None:
        t1, t2 = np.clip(t1, 0, d_max), np.clip(t2, 0, d_max)
    return t1, t2


def compute_delta_theta(theta1, theta2, phi, d_max=None):
    """Signed occlusion shift ``sign(dphi/dx) * max(0, theta1 - theta2)``.

    ``sign(0) = 0``, so the shift vanishes where phi is flat along x.
    Shapes are clamped to ``[0, d_max]`` first when ``d_max`` is given.
    """
    t1, t2 = shape_grids(theta1, theta2, phi.shape, d_max)
    return np.sign(x_derivative(phi)) * np.maximum(0.0, t1 - t2)


def compose_disparity(theta1, theta2, phi, d_max=None):
    """Foreground shape where ``phi > 0``, background shape elsewhere."""
    t1, t2 = shape_grids(theta1, theta2, phi.shape)
    disparity = np.where(phi > 0, t1, t2)
    if d_max is not None:
        disparity = np.clip(disparity, 0, d_max)
    return disparity


def predict_occlusion(phi, delta_theta):
    """Background pixels whose shifted lookup lands in the foreground."""
    if phi.shape != delta_theta.shape:
        raise ValueError("phi and delta_theta must share dimensions")
    return (phi < 0) & (sample_shifted(phi, delta_theta) > 0)
