"""
Pooling evidence over patches, and fitting a surface without a centre
=====================================================================

Each patch of side 3^k proposes a disparity with a confidence taken from how
sharply its summed cost curve dips. A pixel's consensus is the product of the
Gaussians from every valid patch that contains it. Large patches are confident
but blurred across boundaries; the validity flags drop any patch that mixes
foreground with visible background.

The second half fits a quadratic disparity surface to that consensus twice:
once by solving the normal equations directly, and once the way a network of
local units could, by repeated neighbour averaging of the local sums.
"""

import warnings

import numpy as np

from lsstereo import Ellipse, build_matching_cost, generate_scene
from lsstereo.hierarchy import (build_hierarchy, distributed_fit_shapes, downward_consensus,
                                fit_shapes, reset_validity, update_messages, upward_costs,
                                upward_validity)
from lsstereo.levelset import reinitialize

from _common import panels

scene = generate_scene(120, 120, 12, 3, Ellipse(60, 60, 30, 24), 4)
C = build_matching_cost(scene.pair)
h = build_hierarchy(120, 120, num_levels=4, d_max=C.d_max)
print("patch sizes", [lvl.size for lvl in h.levels],
      "patch grids", [lvl.shape for lvl in h.levels])

# -- round one: no idea where the figure is, every patch is trusted ------------
reset_validity(h)
upward_costs(h, C)
update_messages(h)
blind = downward_consensus(h)

# -- with the true boundary, mixed patches drop out -----------------------------
phi = reinitialize(np.where(scene.fg_mask, 1.0, -1.0))
dtheta = np.zeros_like(phi)  # no shift: only the figure/ground split matters here
upward_validity(h, phi, dtheta)
update_messages(h)
informed = downward_consensus(h)
for lvl in h.levels:
    print(f"  size {lvl.size:2d}: {lvl.w.mean():.1%} of patches valid")

err_blind = np.abs(blind.mean - scene.gt_disparity)
err_inf = np.abs(informed.mean - scene.gt_disparity)
rim = np.abs(phi) < 6
print(f"consensus error within 6 px of the rim: {np.nanmean(err_blind[rim]):.2f} px before, "
      f"{np.nanmean(err_inf[rim]):.2f} px with validity")

# -- fit the two layer surfaces ------------------------------------------------
theta1, theta2 = fit_shapes(informed, phi)
print("central fit:   fg", np.round(theta1.grid(120, 120)[60, 60], 4),
      " bg", np.round(theta2.grid(120, 120)[5, 5], 4))
for rounds in (5, 50, 400):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        f1, f2 = distributed_fit_shapes(h, informed, phi, rounds)
    gap = np.max(np.abs(f1.theta.grid(120, 120) - theta1.grid(120, 120))[phi > 0])
    print(f"distributed fit after {rounds:3d} averaging rounds: worst fg gap {gap:.2e} px, "
          f"spread across units {f1.dispersion:.2e}")

panels([blind.mean, informed.mean, np.log10(informed.sigma)],
       ["consensus, all patches", "consensus, valid patches", "log10 sigma"],
       "04_consensus.png", cmap="viridis")
