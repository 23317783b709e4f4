"""
Where do boundaries live? Monocular edges and occlusion cues
============================================================

The boundary term of the energy is weighted by a mix of two distance maps.
B_m measures how far a pixel is from an intensity edge in either image, a
monocular cue. B_o measures how far a point of disparity space is from a
place where the matching cost jumps along the scanline, the signature of an
occluding contour. On random-dot textures intensity edges are everywhere and
carry no information, so the occlusion cue does the work.
"""

import numpy as np

from lsstereo import (Ellipse, build_matching_cost, build_monocular_boundary_cost,
                      build_occlusion_boundary_cost, generate_scene)
from lsstereo.signals import sample_volume

from _common import panels

scene = generate_scene(200, 200, 20, 5, Ellipse(100, 100, 55, 45), 7)
C = build_matching_cost(scene.pair)
B_m = build_monocular_boundary_cost(scene.pair)
B_o = build_occlusion_boundary_cost(C)

# -- read both cues at the foreground disparity ---------------------------------
# the foreground boundary is a place where, at d = 20, the cost changes
# sharply along x; B_o read at that disparity should be small right there
fg_disp = scene.gt_disparity.max()
bo_fg = B_o.values[:, :, int(fg_disp)]
bm_fg = B_m.values[:, :, int(fg_disp)]

rim = scene.gt_boundary
print(f"B_o at d={fg_disp:.0f}: mean on the true rim {bo_fg[rim].mean():.3f}, "
      f"mean elsewhere {bo_fg[~rim].mean():.3f}")
print(f"B_m at d={fg_disp:.0f}: mean on the true rim {bm_fg[rim].mean():.3f}, "
      f"mean elsewhere {bm_fg[~rim].mean():.3f}")

# -- how sharply does B_o locate the rim along each scanline? --------------------
cols = np.arange(200)
hits = []
for y in range(60, 141, 10):
    left_rim = np.flatnonzero(rim[y])[0]
    window = slice(left_rim - 10, left_rim + 11)
    hits.append(int(cols[window][np.argmin(bo_fg[y, window])] - left_rim))
print("argmin of B_o near the left rim, offset from the true rim per row:", hits)

panels([bm_fg, bo_fg, sample_volume(B_o.values, scene.gt_disparity)],
       ["B_m at d_fg", "B_o at d_fg", "B_o along true disparity"], "02_signals.png",
       cmap="magma")
