"""Ground-truth occlusion, the near-boundary evaluation band, and the metrics."""

from dataclasses import dataclass

import numpy as np

BAND_RADIUS = 20
BAND_EXCLUDE = 1
BAD_THRESHOLD = 4.0


def _round(x):
    return np.floor(x + 0.5).astype(np.intp)


TIE = 1e-9


def _runs(valid, d, min_jump):
    """Maximal column runs of finite disparity without a jump above ``min_jump``."""
    cut = ~valid[1:] | ~valid[:-1] | (np.abs(np.diff(d)) > min_jump)
    starts = np.concatenate([[0], np.flatnonzero(cut) + 1])
    ends = np.concatenate([np.flatnonzero(cut), [d.size - 1]])
    return [(a, b) for a, b in zip(starts, ends) if valid[a]]


def derive_gt_occlusion(gt_disparity, min_jump=0.5):
    """Pixels hidden from the left or right view by a nearer surface.

    A cyclopean pixel ``x`` projects to ``x + s d`` (``s = +1`` left view,
    ``-1`` right view). Each run of columns ``[a, b]`` whose disparity has no
    jump above ``min_jump`` covers the half-open view interval between the
    projections of its outer pixel edges ``a - 1/2`` and ``b + 1/2``, with the
    disparity extrapolated linearly to those edges. A pixel is occluded when
    its projection falls inside another run that is nearer there by more
    than ``min_jump``. For a scene warped pixel-exactly from planar layers
    this reproduces the rendering geometry, including the rounding of
    fractional jumps. Pixels with non-finite disparity neither occlude nor
    count as occluded.
    """
    disp = np.asarray(gt_disparity, dtype=float)
    h, w = disp.shape
    valid = np.isfinite(disp)
    occluded = np.zeros((h, w), dtype=bool)
    xs = np.arange(w, dtype=float)
    for y in range(h):
        d = np.where(valid[y], disp[y], 0.0)
        runs = _runs(valid[y], d, min_jump)
        if len(runs) < 2:
            continue
        for sign in (1.0, -1.0):
            p = xs + sign * d
            for a, b in runs:
                da = d[a] - 0.5 * (d[a + 1] - d[a]) if b > a else d[a]
                db = d[b] + 0.5 * (d[b] - d[b - 1]) if b > a else d[b]
                # half-pixel ties go to the right, as in round-half-up; the
                # offset absorbs roundoff in the edge positions
                lo, hi = a - 0.5 + sign * da - TIE, b + 0.5 + sign * db - TIE
                inside = valid[y] & (p >= lo) & (p < hi)
                inside[a:b + 1] = False
                if not inside.any():
                    continue
                # disparity of the covering run where the ray meets it
                proj = np.arange(a, b + 1) + sign * d[a:b + 1]
                k = np.clip(np.searchsorted(proj, p[inside]), 0, b - a)
                occluded[y, np.flatnonzero(inside)] |= d[a + k] > d[inside] + min_jump
    return occluded


def boundary_from_disparity(gt_disparity, min_jump=1.0):
    """Pixels nearer than a 4-neighbour by more than ``min_jump``.

    For a two-layer scene this is the rim of the foreground region.
    """
    d = np.asarray(gt_disparity, dtype=float)
    p = np.pad(d, 1, mode="edge")
    centre = p[1:-1, 1:-1]
    out = np.zeros(d.shape, dtype=bool)
    with np.errstate(invalid="ignore"):
        for nb in (p[1:-1, :-2], p[1:-1, 2:], p[:-2, 1:-1], p[2:, 1:-1]):
            out |= np.isfinite(nb) & (centre > nb + min_jump)
    return out & np.isfinite(d)


def scanline_boundary_distance(gt_boundary):
    """Per-pixel distance along its own row to the nearest boundary pixel.

    Also returns the column of that pixel (-1 when the row has none).
    """
    h, w = gt_boundary.shape
    dist = np.full((h, w), np.inf)
    nearest = np.full((h, w), -1, dtype=np.intp)
    xs = np.arange(w)
    for y in range(h):
        cols = np.flatnonzero(gt_boundary[y])
        if cols.size == 0:
            continue
        k = np.clip(np.searchsorted(cols, xs), 1, cols.size) - 1
        left = cols[k]
        right = cols[np.minimum(k + 1, cols.size - 1)]
        use_right = np.abs(right - xs) < np.abs(left - xs)
        best = np.where(use_right, right, left)
        dist[y] = np.abs(best - xs)
        nearest[y] = best
    return dist, nearest


@dataclass(frozen=True)
class EvalRegion:
    fg_band: np.ndarray
    bg_band: np.ndarray
    gt_occlusion: np.ndarray
    gt_disparity: np.ndarray

    @property
    def mask(self):
        return self.fg_band | self.bg_band


def build_eval_region(gt_boundary, gt_disparity, gt_occlusion=None, fg_mask=None,
                      radius=BAND_RADIUS, exclude=BAND_EXCLUDE, side_tolerance=1.0):
    """Pixels ``exclude < distance <= radius`` along the scanline from a boundary.

    ``gt_boundary`` marks boundary pixels on the foreground side. Without
    ``fg_mask`` a band pixel is foreground when its disparity is within
    ``side_tolerance`` of (or above) the disparity at its nearest boundary
    pixel. Pixels lacking ground truth are left out.
    """
    gt_boundary = np.asarray(gt_boundary, dtype=bool)
    gt_disparity = np.asarray(gt_disparity, dtype=float)
    if gt_boundary.shape != gt_disparity.shape:
        raise ValueError("gt_boundary and gt_disparity must share dimensions")
    dist, nearest = scanline_boundary_distance(gt_boundary)
    band = (dist > exclude) & (dist <= radius) & np.isfinite(gt_disparity)
    if fg_mask is None:
        rows = np.arange(gt_boundary.shape[0])[:, None]
        d_ref = gt_disparity[rows, np.maximum(nearest, 0)]
        with np.errstate(invalid="ignore"):
            fg_mask = gt_disparity >= d_ref - side_tolerance
    if gt_occlusion is None:
        gt_occlusion = derive_gt_occlusion(gt_disparity)
    return EvalRegion(band & fg_mask, band & ~fg_mask, np.asarray(gt_occlusion, dtype=bool),
                      gt_disparity)


def occlusion_f1(predicted, region):
    """Precision, recall and F1 of occlusion labels inside the evaluation band.

    Both sets empty scores 1; exactly one empty scores 0.
    """
    m = region.mask
    pred = np.asarray(predicted, dtype=bool) & m
    gt = region.gt_occlusion & m
    n_pred, n_gt = int(pred.sum()), int(gt.sum())
    if n_pred == 0 and n_gt == 0:
        return {"precision": 1.0, "recall": 1.0, "f1": 1.0}
    if n_pred == 0 or n_gt == 0:
        return {"precision": 0.0, "recall": 0.0, "f1": 0.0}
    tp = int((pred & gt).sum())
    precision, recall = tp / n_pred, tp / n_gt
    f1 = 0.0 if tp == 0 else 2 * precision * recall / (precision + recall)
    return {"precision": precision, "recall": recall, "f1": f1}


def bad4(disparity, region, threshold=BAD_THRESHOLD):
    """Fraction of mutually visible band pixels with error above ``threshold``.

    Returns NaN when no pixel qualifies.
    """
    use = region.mask & ~region.gt_occlusion & np.isfinite(region.gt_disparity)
    n = int(use.sum())
    if n == 0:
        return float("nan")
    err = np.abs(np.asarray(disparity, dtype=float) - region.gt_disparity)
    return float(np.count_nonzero(err[use] > threshold)) / n
