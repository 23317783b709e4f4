"""Level-set field operations: smoothed Heaviside, curvature, descent, energy.

The field ``phi`` is positive on the foreground and negative on the
background. Spatial derivatives use central differences with replicate
padding, which also realizes the zero-flux condition on the image border.
"""

import warnings

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .errors import InvalidInputError, NumericalInstabilityError
from .geometry import compute_delta_theta, sample_shifted, shape_grids
from .signals import sample_volume

GRADIENT_REG = 1e-8


def heaviside_eps(z, eps):
    return 0.5 * (1.0 + (2.0 / np.pi) * np.arctan(np.asarray(z) / eps))


def delta_eps(z, eps):
    z = np.asarray(z)
    return (eps / np.pi) / (eps * eps + z * z)


def gradient(f):
    """``(df/dx, df/dy)`` by central differences, border replicated."""
    p = np.pad(f, 1, mode="edge")
    gx = 0.5 * (p[1:-1, 2:] - p[1:-1, :-2])
    gy = 0.5 * (p[2:, 1:-1] - p[:-2, 1:-1])
    return gx, gy


def divergence(vx, vy):
    return gradient(vx)[0] + gradient(vy)[1]


def gradient_norm(phi, eta=GRADIENT_REG):
    gx, gy = gradient(phi)
    return np.sqrt(gx * gx + gy * gy + eta * eta)


def curvature_and_normal(phi, eta=GRADIENT_REG):
    """Curvature ``div(grad phi / |grad phi|)`` and the unit normal field.

    Returns ``kappa`` and ``(nx, ny)``. With phi positive inside, a convex
    foreground has negative curvature on its boundary.
    """
    gx, gy = gradient(phi)
    norm = np.sqrt(gx * gx + gy * gy + eta * eta)
    nx, ny = gx / norm, gy / norm
    return divergence(nx, ny), (nx, ny)


def boundary_weight(b_m, b_o, theta1_grid, alpha1, alpha2, alpha3):
    """Contour weight ``alpha1 B_o + alpha2 B_m + alpha3`` read at the foreground shape."""
    return (alpha1 * sample_volume(b_o.values, theta1_grid)
            + alpha2 * sample_volume(b_m.values, theta1_grid) + alpha3)


def _shape_inputs(C, theta1, theta2, shape):
    return shape_grids(theta1, theta2, shape, C.d_max)


def evaluate_energy(C, b_m, b_o, theta1, theta2, phi, cfg, delta_theta=None):
    """Discrete energy with smoothed Heaviside and delta.

    Foreground matching cost, background matching cost over the unoccluded
    background, and the boundary-weighted contour length. ``delta_theta``
    defaults to the shift implied by the current shapes and ``phi``.
    """
    t1, t2 = _shape_inputs(C, theta1, theta2, phi.shape)
    if delta_theta is None:
        delta_theta = compute_delta_theta(theta1, theta2, phi, C.d_max)
    eps = cfg.epsilon
    h = heaviside_eps(phi, eps)
    h_plus = heaviside_eps(sample_shifted(phi, delta_theta), eps)
    c1 = sample_volume(C.values, t1)
    c2 = sample_volume(C.values, t2)
    bw = boundary_weight(b_m, b_o, t1, cfg.alpha1, cfg.alpha2, cfg.alpha3)
    region = np.sum(h * c1) + np.sum((1 - h_plus) * (1 - h) * c2)
    contour = np.sum(bw * delta_eps(phi, eps) * gradient_norm(phi))
    return float(region + cfg.mu * contour)


def phi_velocity(phi, C, b_m, b_o, theta1, theta2, cfg, delta_theta=None):
    """Descent direction ``dphi/dt`` for the energy with shapes held fixed.

    ``delta(phi) * [-C(x, y, t1) + C(x - shift, y, t2) + mu (B kappa + N . grad B)]``
    with the background cost read behind the occlusion shift; reads beyond
    the image replicate the border cost.
    """
    t1, t2 = _shape_inputs(C, theta1, theta2, phi.shape)
    if delta_theta is None:
        delta_theta = compute_delta_theta(theta1, theta2, phi, C.d_max)
    h, w = phi.shape
    c1 = sample_volume(C.values, t1)
    cols = np.arange(w)[None, :] - delta_theta
    c2_behind = sample_volume(C.values, t2, columns=cols)
    bw = boundary_weight(b_m, b_o, t1, cfg.alpha1, cfg.alpha2, cfg.alpha3)
    kappa, (nx, ny) = curvature_and_normal(phi)
    bx, by = gradient(bw)
    force = -c1 + c2_behind + cfg.mu * (bw * kappa + nx * bx + ny * by)
    return delta_eps(phi, cfg.epsilon) * force


def update_phi(phi, C, b_m, b_o, theta1, theta2, cfg, dt=None, delta_theta=None,
               median=True):
    """One explicit Euler descent step, then the median filter on phi.

    The step is ``dt * cfg.time_scale`` in units of the velocity. The smoothed
    delta peaks at ``1 / (pi * eps)``, so with unit-range costs an unscaled
    ``dt`` moves the front by a small fraction of a pixel per step and the
    median filter's own drift would dominate.
    """
    dt = cfg.dt if dt is None else dt
    if not dt > 0:
        raise InvalidInputError("dt must be positive")
    tau = dt * cfg.time_scale
    new = phi + tau * phi_velocity(phi, C, b_m, b_o, theta1, theta2, cfg, delta_theta)
    if median and cfg.median_window > 1:
        new = ndimage.median_filter(new, size=cfg.median_window, mode="nearest")
    if not np.all(np.isfinite(new)):
        bad = int(np.count_nonzero(~np.isfinite(new)))
        raise NumericalInstabilityError(
            f"phi update produced {bad} non-finite values; step {tau} is likely too large")
    return new


def zero_crossings(phi):
    """Sub-pixel points ``(x, y)`` where phi changes sign between grid neighbours.

    Positions come from linear interpolation along each crossing grid edge;
    ``phi <= 0`` counts as background.
    """
    pos = phi > 0
    points = []
    # horizontal edges
    e = pos[:, 1:] != pos[:, :-1]
    yy, xx = np.nonzero(e)
    a, b = phi[yy, xx], phi[yy, xx + 1]
    t = a / (a - b)
    points.append(np.column_stack([xx + t, yy.astype(float)]))
    # vertical edges
    e = pos[1:, :] != pos[:-1, :]
    yy, xx = np.nonzero(e)
    a, b = phi[yy, xx], phi[yy + 1, xx]
    t = a / (a - b)
    points.append(np.column_stack([xx.astype(float), yy + t]))
    return np.concatenate(points, axis=0)


def reinitialize(phi):
    """Signed Euclidean distance to the interpolated zero crossing of phi.

    The sign pattern of the input is kept. A field without a sign change is
    returned unchanged with a warning.
    """
    pts = zero_crossings(phi)
    if len(pts) == 0:
        warnings.warn("phi has no zero crossing; boundary vanished", RuntimeWarning,
                      stacklevel=2)
        return phi.copy()
    h, w = phi.shape
    yy, xx = np.mgrid[0:h, 0:w]
    dist, _ = cKDTree(pts).query(np.column_stack([xx.ravel(), yy.ravel()]))
    dist = dist.reshape(h, w)
    return np.where(phi > 0, dist, -dist)


def _ellipse_root(r0, z0, z1, g, iterations=160):
    n0 = r0 * z0
    s0 = z1 - 1.0
    s1 = np.where(g < 0, 0.0, np.hypot(n0, z1) - 1.0)
    s = 0.5 * (s0 + s1)
    for _ in range(iterations):
        s = 0.5 * (s0 + s1)
        ratio0 = n0 / (s + r0)
        ratio1 = z1 / (s + 1.0)
        gs = ratio0 * ratio0 + ratio1 * ratio1 - 1.0
        s0 = np.where(gs < 0, s0, s)
        s1 = np.where(gs < 0, s, s1)
    return s


def ellipse_distance(px, py, a, b):
    """Euclidean distance from points ``(px, py)`` to the ellipse x²/a² + y²/b² = 1.

    Robust bisection on the first quadrant; the larger axis is put first.
    """
    px, py = np.abs(np.asarray(px, dtype=float)), np.abs(np.asarray(py, dtype=float))
    if a < b:
        px, py, a, b = py, px, b, a
    e0, e1 = float(a), float(b)
    y0, y1 = np.broadcast_arrays(px, py)
    dist = np.empty(y0.shape)
    # coordinates this close to an axis are snapped onto it; the bisection
    # brackets degenerate when y/e underflows against 1
    tiny = 1e-12 * e0
    y0 = np.where(y0 < tiny, 0.0, y0)
    y1 = np.where(y1 < tiny, 0.0, y1)

    general = (y1 > 0) & (y0 > 0)
    if np.any(general):
        z0 = y0[general] / e0
        z1 = y1[general] / e1
        g = z0 * z0 + z1 * z1 - 1.0
        r0 = (e0 / e1) ** 2
        sbar = _ellipse_root(r0, z0, z1, g)
        x0 = r0 * y0[general] / (sbar + r0)
        x1 = y1[general] / (sbar + 1.0)
        d = np.hypot(x0 - y0[general], x1 - y1[general])
        dist[general] = np.where(g == 0, 0.0, d)

    on_minor = (y1 > 0) & (y0 == 0)
    dist[on_minor] = np.abs(y1[on_minor] - e1)

    on_major = y1 == 0
    numer0 = e0 * y0[on_major]
    denom0 = e0 * e0 - e1 * e1
    inner = numer0 < denom0
    xde0 = np.where(inner, numer0 / denom0 if denom0 > 0 else 0.0, 0.0)
    x0 = e0 * xde0
    x1 = e1 * np.sqrt(np.clip(1.0 - xde0 * xde0, 0.0, None))
    dist[on_major] = np.where(inner, np.hypot(x0 - y0[on_major], x1),
                              np.abs(y0[on_major] - e0))
    return dist


def init_ellipse(width, height, center, semi_axes):
    """Signed distance to an ellipse, positive inside."""
    cx, cy = center
    a, b = semi_axes
    if not (a > 0 and b > 0):
        raise InvalidInputError(f"ellipse semi-axes must be positive, got {semi_axes}")
    yy, xx = np.mgrid[0:height, 0:width]
    dx, dy = xx - cx, yy - cy
    inside = (dx / a) ** 2 + (dy / b) ** 2 < 1.0
    if not inside.any():
        raise InvalidInputError("ellipse contains no pixel of the image")
    dist = ellipse_distance(dx, dy, a, b)
    return np.where(inside, dist, -dist)


def thin_structure_violations(phi, delta_theta):
    """Pixels on the boundary whose shifted lookup is not foreground.

    Counts zero-crossing-adjacent foreground pixels where
    ``phi(x + delta_theta) <= 0``, i.e. foreground narrower than the shift.
    """
    fg = phi > 0
    edge = fg & ~ndimage.binary_erosion(fg, border_value=1)
    shifted = sample_shifted(phi, delta_theta)
    return int(np.count_nonzero(edge & (np.abs(delta_theta) > 0) & (shifted <= 0)))
