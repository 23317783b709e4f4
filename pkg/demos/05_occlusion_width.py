"""
Occlusion width equals the disparity jump
=========================================

Geometry fixes the width of an occluded band: a boundary where disparity
drops by J hides exactly J background pixels along the scanline. The solver
never estimates those bands directly, so their width is a clean check on the
fitted layer surfaces. This sweep runs the solver at several jumps.
"""

import numpy as np

from lsstereo import (Ellipse, SolverConfig, StereoInputs, build_matching_cost,
                      build_monocular_boundary_cost, build_occlusion_boundary_cost,
                      generate_scene, run)

from _common import plt, save


def run_widths(mask):
    out = []
    for row in mask:
        e = np.diff(np.concatenate([[0], row.astype(int), [0]]))
        out += list(np.flatnonzero(e == -1) - np.flatnonzero(e == 1))
    return out


jumps, widths, fitted = [5, 10, 20], [], []
for jump in jumps:
    scene = generate_scene(200, 200, 5 + jump, 5, Ellipse(100, 100, 55, 45), 7)
    C = build_matching_cost(scene.pair)
    inputs = StereoInputs(C, build_monocular_boundary_cost(scene.pair),
                          build_occlusion_boundary_cost(C))
    res = run(inputs, (108, 95, 40, 32), SolverConfig())
    fg = res.phi > 0
    rim = fg & ~(np.roll(fg, 1, axis=1) & np.roll(fg, -1, axis=1))
    yy, xx = np.nonzero(rim)
    widths.append(np.mean(run_widths(res.occlusion)))
    fitted.append(float(np.mean(res.theta1(xx, yy) - res.theta2(xx, yy))))
    print(f"jump {jump:2d}: {res.status} in {res.iterations} iterations, mean band width "
          f"{widths[-1]:.2f}, fitted jump {fitted[-1]:.2f}")

if plt is not None:
    fig, ax = plt.subplots(figsize=(4, 3.5))
    ax.plot(jumps, jumps, "k:", label="identity")
    ax.plot(fitted, widths, "o-", label="runs")
    ax.set_xlabel("fitted jump at the rim (px)")
    ax.set_ylabel("mean occluded run width (px)")
    ax.legend()
    save(fig, "05_widths.png")
