"""Independent brute-force references used by the unit and acceptance suites.

Nothing here calls the code under test beyond reading its inputs; each
function recomputes a quantity directly from its definition.
"""

import numpy as np

from lsstereo.levelset import evaluate_energy


def fd_energy_gradient(C, b_m, b_o, theta1, theta2, phi, cfg, delta_theta, pixels, h=1e-4):
    """Central finite differences of the discrete energy at the given ``(y, x)`` pixels."""
    out = np.empty(len(pixels))
    p = phi.copy()
    for i, (y, x) in enumerate(pixels):
        p[y, x] = phi[y, x] + h
        ep = evaluate_energy(C, b_m, b_o, theta1, theta2, p, cfg, delta_theta)
        p[y, x] = phi[y, x] - h
        em = evaluate_energy(C, b_m, b_o, theta1, theta2, p, cfg, delta_theta)
        p[y, x] = phi[y, x]
        out[i] = (ep - em) / (2 * h)
    return out


def heaviside(z, eps):
    return 0.5 + np.arctan(z / eps) / np.pi


def dirac(z, eps):
    return eps / (np.pi * (eps * eps + z * z))


def exact_region_gradient(c1, c2, phi, delta_theta, eps):
    """Analytic derivative of the two region terms of the discrete energy.

    ``sum H(phi) c1 + sum (1 - H(phi_shift)) (1 - H(phi)) c2`` where
    ``phi_shift`` reads phi at ``x + delta_theta`` by linear interpolation with
    clamping; the adjoint of that read is scattered back explicitly.
    """
    h, w = phi.shape
    x = np.clip(np.arange(w)[None, :] + delta_theta, 0, w - 1)
    x0 = np.minimum(np.floor(x).astype(int), w - 2)
    t = x - x0
    rows = np.broadcast_to(np.arange(h)[:, None], phi.shape)
    shifted = (1 - t) * phi[rows, x0] + t * phi[rows, x0 + 1]
    g = dirac(phi, eps) * c1 - dirac(phi, eps) * (1 - heaviside(shifted, eps)) * c2
    coef = -dirac(shifted, eps) * (1 - heaviside(phi, eps)) * c2
    np.add.at(g, (rows, x0), coef * (1 - t))
    np.add.at(g, (rows, x0 + 1), coef * t)
    return g


def patch_cost(C, D, beta, y, x, size):
    """Direct sum of ``C + beta |d - D|`` over one square patch."""
    block = C[y:y + size, x:x + size, :]
    d = np.arange(C.shape[2], dtype=float)
    reg = 0.0 if D is None else beta * np.abs(d[None, None, :] - D[y:y + size, x:x + size, None])
    return (block + reg).sum(axis=(0, 1))


def consensus_by_enumeration(levels, height, width):
    """Product of Gaussians over every valid patch containing each pixel.

    ``levels`` is a list of ``(size, w, d, precision)`` per level with arrays
    indexed by patch top-left corner.
    """
    prec = np.zeros((height, width))
    acc = np.zeros((height, width))
    for size, w, d, p in levels:
        ph, pw = w.shape
        for y in range(ph):
            for x in range(pw):
                if w[y, x] and p[y, x] > 0:
                    prec[y:y + size, x:x + size] += p[y, x]
                    acc[y:y + size, x:x + size] += p[y, x] * d[y, x]
    with np.errstate(divide="ignore", invalid="ignore"):
        var = np.where(prec > 0, 1.0 / prec, np.inf)
        mean = np.where(prec > 0, acc * var, np.nan)
    return mean, var


def delta_theta_discontinuity(delta_theta, jump=0.5):
    """Pixels where the shift jumps by more than ``jump`` to an x-neighbour."""
    d = np.abs(np.diff(delta_theta, axis=1)) > jump
    out = np.zeros(delta_theta.shape, dtype=bool)
    out[:, 1:] |= d
    out[:, :-1] |= d
    return out


def pixel_flags(phi, delta_theta):
    """Foreground and visible-background flags per pixel, row by row with np.interp."""
    h, w = phi.shape
    cols = np.arange(w, dtype=float)
    shifted = np.array([np.interp(cols + delta_theta[y], cols, phi[y]) for y in range(h)])
    return phi > 0, shifted < 0


def patch_validity(fg, bg, y, x, size):
    """A patch is valid when it holds foreground or visible background, not both."""
    f = fg[y:y + size, x:x + size].any()
    b = bg[y:y + size, x:x + size].any()
    return bool(f) != bool(b)


def message(cost, d_max):
    """First argmin and the precision ``((mean - min) / d_max)^2`` of a cost curve."""
    d = int(np.argmin(cost))
    gap = float(np.mean(cost) - cost[d])
    return d, (gap / d_max) ** 2
