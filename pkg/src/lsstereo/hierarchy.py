"""Undecimated multiscale patch hierarchy and Gaussian disparity consensus.

Level ``k`` holds one square patch of side ``3**k`` at every pixel offset that
fits inside the image; patch arrays are indexed by the patch's top-left
pixel. A level-``k`` patch is tiled by nine level-``k-1`` children at offsets
``(i * 3**(k-1), j * 3**(k-1))`` for ``i, j`` in ``{0, 1, 2}``. Because every
patch reaches each of its pixels through exactly one chain of children, sums
pushed down the hierarchy count each containing patch once.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from .errors import InvalidInputError
from .geometry import ShapeModel, basis, normalized_frame, sample_shifted

FLAT_MESSAGE_GAP = 1e-9
MAX_CONDITION = 1e12
MIN_REGION_PIXELS = 6

OFFSETS = [(i, j) for i in range(3) for j in range(3)]


@dataclass
class PatchLevel:
    size: int
    shape: tuple
    f: np.ndarray = None
    b: np.ndarray = None
    w: np.ndarray = None
    cost: np.ndarray = None
    d: np.ndarray = None
    precision: np.ndarray = None  # 1 / sigma_p^2, zero for flat cost curves
    down_precision: np.ndarray = None
    down_mean_acc: np.ndarray = None

    @property
    def sigma(self):
        with np.errstate(divide="ignore"):
            return np.where(self.precision > 0, 1.0 / np.sqrt(self.precision), np.inf)


@dataclass
class PatchHierarchy:
    height: int
    width: int
    d_max: int
    levels: list = field(default_factory=list)

    @property
    def lateral_radius(self):
        return self.d_max

    def children(self, k, y, x):
        """Top-left corners of the nine level ``k-1`` tiles of patch ``(k, y, x)``."""
        c = self.levels[k - 1].size
        return [(y + i * c, x + j * c) for i, j in OFFSETS]

    def parents(self, k, y, x):
        """Level ``k+1`` patches that have ``(k, y, x)`` as a child."""
        if k + 1 >= len(self.levels):
            return []
        c = self.levels[k].size
        ph, pw = self.levels[k + 1].shape
        out = []
        for i, j in OFFSETS:
            py, px = y - i * c, x - j * c
            if 0 <= py < ph and 0 <= px < pw:
                out.append((py, px))
        return out


@dataclass(frozen=True)
class Consensus:
    """Per-pixel Gaussian disparity summary.

    ``mean`` is NaN and ``sigma`` infinite where no valid patch contributes.
    """

    mean: np.ndarray
    sigma: np.ndarray

    @property
    def precision(self):
        return np.where(np.isfinite(self.sigma), 1.0 / self.sigma ** 2, 0.0)

    @property
    def informed(self):
        return np.isfinite(self.sigma)


def build_hierarchy(width, height, num_levels=4, d_max=1):
    if num_levels < 1 or 3 ** (num_levels - 1) > min(width, height):
        raise InvalidInputError(
            f"num_levels={num_levels} needs patches of side {3 ** (num_levels - 1)}, "
            f"which do not fit a {width}x{height} image")
    levels = []
    for k in range(num_levels):
        s = 3 ** k
        levels.append(PatchLevel(s, (height - s + 1, width - s + 1)))
    h = PatchHierarchy(height, width, d_max, levels)
    reset_validity(h)
    return h


def _gather_children(child, parent_shape, step):
    """Yield the nine child-array views aligned with the parent grid."""
    ph, pw = parent_shape
    for i, j in OFFSETS:
        yield child[i * step:i * step + ph, j * step:j * step + pw]


def reset_validity(h):
    """Mark every patch valid, as before any boundary exists."""
    for lvl in h.levels:
        lvl.f = np.ones(lvl.shape, dtype=bool)
        lvl.b = np.zeros(lvl.shape, dtype=bool)
        lvl.w = np.ones(lvl.shape, dtype=bool)


def upward_validity(h, phi, delta_theta):
    """Foreground / visible-background flags and validity for every patch.

    A pixel is foreground when ``phi > 0`` and visible background when the
    shifted lookup ``phi(x + delta_theta) < 0``; patches OR their children's
    flags and are valid when exactly one flag is set.
    """
    if phi.shape != (h.height, h.width) or delta_theta.shape != phi.shape:
        raise InvalidInputError("fields do not match the hierarchy dimensions")
    base = h.levels[0]
    base.f = phi > 0
    base.b = sample_shifted(phi, delta_theta) < 0
    base.w = base.f ^ base.b
    for k in range(1, len(h.levels)):
        child, lvl = h.levels[k - 1], h.levels[k]
        f = np.zeros(lvl.shape, dtype=bool)
        b = np.zeros(lvl.shape, dtype=bool)
        for cf, cb in zip(_gather_children(child.f, lvl.shape, child.size),
                          _gather_children(child.b, lvl.shape, child.size)):
            f |= cf
            b |= cb
        lvl.f, lvl.b, lvl.w = f, b, f ^ b


def upward_costs(h, C, D=None, beta=0.0):
    """Aggregate ``C(x, y, d) + beta |d - D(x, y)|`` over every patch.

    The regularizer is skipped when ``D`` is None.
    """
    if beta < 0:
        raise InvalidInputError("beta must be non-negative")
    values = C.values if hasattr(C, "values") else np.asarray(C)
    cost = values.astype(float, copy=True)
    if D is not None and beta > 0:
        d = np.arange(values.shape[2], dtype=float)
        cost += beta * np.abs(d[None, None, :] - D[:, :, None])
    h.levels[0].cost = cost
    for k in range(1, len(h.levels)):
        child, lvl = h.levels[k - 1], h.levels[k]
        acc = np.zeros(lvl.shape + (values.shape[2],))
        for view in _gather_children(child.cost, lvl.shape, child.size):
            acc += view
        lvl.cost = acc


def message_from_cost(cost, d_max):
    """Disparity message ``(d_p, precision_p)`` from aggregated cost curves.

    ``precision = ((mean - min) / d_max)^2``; flat curves carry zero precision.
    """
    d = np.argmin(cost, axis=-1).astype(float)
    gap = cost.mean(axis=-1) - cost.min(axis=-1)
    precision = np.where(gap > FLAT_MESSAGE_GAP, (gap / d_max) ** 2, 0.0)
    return d, precision


def update_messages(h):
    for lvl in h.levels:
        lvl.d, lvl.precision = message_from_cost(lvl.cost, h.d_max)


def downward_consensus(h):
    """Product of Gaussian messages from all valid patches containing each pixel."""
    top = h.levels[-1]
    top.down_precision = np.where(top.w, top.precision, 0.0)
    top.down_mean_acc = np.where(top.w, top.precision * top.d, 0.0)
    for k in range(len(h.levels) - 2, -1, -1):
        lvl, parent = h.levels[k], h.levels[k + 1]
        prec = np.where(lvl.w, lvl.precision, 0.0)
        acc = np.where(lvl.w, lvl.precision * lvl.d, 0.0)
        ph, pw = parent.shape
        step = lvl.size
        for i, j in OFFSETS:
            prec[i * step:i * step + ph, j * step:j * step + pw] += parent.down_precision
            acc[i * step:i * step + ph, j * step:j * step + pw] += parent.down_mean_acc
        lvl.down_precision, lvl.down_mean_acc = prec, acc
    base = h.levels[0]
    informed = base.down_precision > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        variance = np.where(informed, 1.0 / base.down_precision, np.inf)
        mean = np.where(informed, base.down_mean_acc * variance, np.nan)
    return Consensus(mean, np.sqrt(variance))


def fit_region(consensus, region, frame, previous=None, label="region"):
    """Precision-weighted least-squares quadratic over ``region``.

    Pixels without consensus information are skipped. Falls back to
    ``previous`` (with a warning) when fewer than six pixels remain or the
    normal equations are too ill-conditioned.
    """
    use = region & consensus.informed
    if np.count_nonzero(use) < MIN_REGION_PIXELS:
        warnings.warn(f"{label}: too few informed pixels for a shape fit", RuntimeWarning,
                      stacklevel=3)
        return previous
    yy, xx = np.nonzero(use)
    sx, ox, sy, oy = frame
    u = basis(sx * xx + ox, sy * yy + oy)
    wgt = consensus.precision[use]
    a = (u * wgt[:, None]).T @ u
    rhs = u.T @ (wgt * consensus.mean[use])
    if np.linalg.cond(a) > MAX_CONDITION:
        warnings.warn(f"{label}: shape fit is ill-conditioned", RuntimeWarning, stacklevel=3)
        return previous
    return ShapeModel(np.linalg.solve(a, rhs), frame)


def fit_regions(phi, occluded=None):
    """Foreground ``phi > 0`` and unoccluded background masks."""
    fg = phi > 0
    bg = ~fg
    if occluded is not None:
        bg &= ~occluded
    return fg, bg


def fit_shapes(consensus, phi, occluded=None, previous=(None, None), frame=None):
    """Foreground and background shapes from the consensus."""
    if frame is None:
        frame = normalized_frame(*phi.shape)
    fg, bg = fit_regions(phi, occluded)
    theta1 = fit_region(consensus, fg, frame, previous[0], "foreground")
    theta2 = fit_region(consensus, bg, frame, previous[1], "background")
    return theta1, theta2


def lateral_graph(region, radius, vertical=1):
    """Adjacency among region pixels: ±radius along scanlines, ±vertical across.

    Returns the sparse adjacency and the flat indices of the nodes.
    """
    hgt, wid = region.shape
    idx = -np.ones(region.shape, dtype=np.intp)
    nodes = np.flatnonzero(region)
    idx.flat[nodes] = np.arange(len(nodes))
    rows, cols = [], []
    shifts = [(0, dx) for dx in range(1, radius + 1)] + [(dy, 0) for dy in range(1, vertical + 1)]
    for dy, dx in shifts:
        a = idx[:hgt - dy, :wid - dx]
        b = idx[dy:, dx:]
        ok = (a >= 0) & (b >= 0)
        rows.append(a[ok])
        cols.append(b[ok])
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    n = len(nodes)
    adj = sparse.coo_matrix((np.ones(len(r)), (r, c)), shape=(n, n)).tocsr()
    return (adj + adj.T).tocsr(), nodes


def metropolis_weights(adj):
    """Doubly stochastic averaging matrix ``W_ij = 1 / (1 + max(deg_i, deg_j))``."""
    deg = np.asarray(adj.sum(axis=1)).ravel()
    coo = adj.tocoo()
    vals = 1.0 / (1.0 + np.maximum(deg[coo.row], deg[coo.col]))
    off = sparse.coo_matrix((vals, (coo.row, coo.col)), shape=adj.shape).tocsr()
    diag = 1.0 - np.asarray(off.sum(axis=1)).ravel()
    return (off + sparse.diags(diag)).tocsr()


def average_pairs(a_stack, b_stack, weights, rounds):
    """Synchronous neighbour averaging of per-unit ``(A, b)`` pairs."""
    n, m = b_stack.shape
    state = np.concatenate([a_stack.reshape(n, m * m), b_stack], axis=1)
    for _ in range(rounds):
        state = weights @ state
    return state[:, :m * m].reshape(n, m, m), state[:, m * m:]


def local_pairs(consensus, region, frame):
    """Per-pixel correlation matrix and cross-correlation vector.

    Weights are ``1 / sigma^4`` as in the cooperative layout; uninformed
    pixels contribute zeros.
    """
    yy, xx = np.nonzero(region)
    sx, ox, sy, oy = frame
    u = basis(sx * xx + ox, sy * yy + oy)
    sig = consensus.sigma[region]
    wgt = np.where(np.isfinite(sig), 1.0 / sig ** 4, 0.0)
    mean = np.where(np.isfinite(sig), consensus.mean[region], 0.0)
    a = wgt[:, None, None] * u[:, :, None] * u[:, None, :]
    b = u * (wgt * mean)[:, None]
    return a, b


@dataclass(frozen=True)
class DistributedFit:
    theta: ShapeModel
    unit_coeffs: np.ndarray
    dispersion: float
    components: int


def distributed_fit_region(consensus, region, frame, rounds, radius, previous=None,
                           vertical=1, label="region"):
    """Shape fit by neighbour averaging of local normal equations.

    Each unit solves its own averaged 6x6 system. With several connected
    components the largest one's solution is reported. ``dispersion`` is the
    largest spread of unit evaluations over the region.
    """
    if rounds < 1:
        raise InvalidInputError("rounds must be at least 1")
    region = region & consensus.informed
    if np.count_nonzero(region) < MIN_REGION_PIXELS:
        warnings.warn(f"{label}: too few informed pixels for a shape fit", RuntimeWarning,
                      stacklevel=2)
        return DistributedFit(previous, np.empty((0, 6)), np.nan, 0)
    adj, nodes = lateral_graph(region, radius, vertical)
    ncomp, labels = connected_components(adj, directed=False)
    if ncomp > 1:
        warnings.warn(f"{label}: averaging graph has {ncomp} components; "
                      "solving each separately", RuntimeWarning, stacklevel=2)
    a, b = local_pairs(consensus, region, frame)
    a_avg, b_avg = average_pairs(a, b, metropolis_weights(adj), rounds)
    coeffs = np.full((len(nodes), 6), np.nan)
    solvable = np.linalg.cond(a_avg) < MAX_CONDITION
    if np.any(solvable):
        coeffs[solvable] = np.linalg.solve(a_avg[solvable], b_avg[solvable][..., None])[..., 0]
    largest = np.argmax(np.bincount(labels))
    members = (labels == largest) & solvable
    if not members.any():
        warnings.warn(f"{label}: no unit could solve its averaged system", RuntimeWarning,
                      stacklevel=2)
        return DistributedFit(previous, coeffs, np.nan, ncomp)
    yy, xx = np.divmod(nodes, region.shape[1])
    sx, ox, sy, oy = frame
    u = basis(sx * xx + ox, sy * yy + oy)
    evals = coeffs[members] @ u.T
    dispersion = float(np.max(evals.max(axis=0) - evals.min(axis=0)))
    theta = ShapeModel(coeffs[members].mean(axis=0), frame)
    return DistributedFit(theta, coeffs, dispersion, ncomp)


def distributed_fit_shapes(h, consensus, phi, rounds, occluded=None, previous=(None, None),
                           frame=None, vertical=1):
    """Foreground and background fits through lateral consensus averaging."""
    if frame is None:
        frame = normalized_frame(*phi.shape)
    fg, bg = fit_regions(phi, occluded)
    fit1 = distributed_fit_region(consensus, fg, frame, rounds, h.lateral_radius, previous[0],
                                  vertical, "foreground")
    fit2 = distributed_fit_region(consensus, bg, frame, rounds, h.lateral_radius, previous[1],
                                  vertical, "background")
    return fit1, fit2
