import functools

import numpy as np
import pytest

from lsstereo.signals import (build_matching_cost, build_monocular_boundary_cost,
                              build_occlusion_boundary_cost)
from lsstereo.solver import StereoInputs
from lsstereo.synthetic import Ellipse, generate_scene

# the reference figure-ground scene used across suites
REF_SIZE = 200
REF_FIGURE = Ellipse(100, 100, 55, 45)
REF_INIT = (108, 95, 40, 32)
REF_SEED = 7


@functools.lru_cache(maxsize=None)
def scene(d_fg=20.0, d_bg=5.0, seed=REF_SEED, size=REF_SIZE, figure=REF_FIGURE, d_max=None):
    return generate_scene(size, size, d_fg, d_bg, figure, seed, d_max=d_max)


@functools.lru_cache(maxsize=None)
def inputs_for(d_fg=20.0, d_bg=5.0, seed=REF_SEED, size=REF_SIZE, figure=REF_FIGURE, d_max=None):
    s = scene(d_fg, d_bg, seed, size, figure, d_max)
    C = build_matching_cost(s.pair)
    return StereoInputs(C, build_monocular_boundary_cost(s.pair), build_occlusion_boundary_cost(C))


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def report(criterion, passed, detail):
    line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def cli_artifacts(tmp_path_factory):
    """A default synthetic scene and one CLI run on it with ground truth."""
    from lsstereo.cli import main
    root = tmp_path_factory.mktemp("cli")
    scene_dir, run_dir = root / "scene", root / "run"
    assert main(["synth", "--out", str(scene_dir), "--seed", "3"]) == 0
    assert main(run_args(scene_dir, run_dir)) == 0
    return scene_dir, run_dir


def run_args(scene_dir, out_dir, gt=True):
    args = ["run", "--left", str(scene_dir / "left.png"), "--right", str(scene_dir / "right.png"),
            "--dmax", "24", "--init-ellipse", "108,95,40,32", "--scene-id", "synthetic",
            "--out", str(out_dir)]
    if gt:
        args += ["--gt-disparity", str(scene_dir / "gt_disparity.pfm"),
                 "--gt-boundary", str(scene_dir / "gt_boundary.png"),
                 "--gt-occlusion", str(scene_dir / "gt_occlusion.png")]
    return args


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def circle_sdf(h, w, cx, cy, r):
    yy, xx = np.mgrid[0:h, 0:w]
    return r - np.hypot(xx - cx, yy - cy)


def zero_crossing_points(phi):
    from lsstereo.levelset import zero_crossings
    return zero_crossings(phi)


@functools.lru_cache(maxsize=None)
def reference_run(**overrides):
    """Solver run on the reference scene, shared by the solver and acceptance suites."""
    import time
    from lsstereo.solver import SolverConfig, run
    t0 = time.perf_counter()
    result = run(inputs_for(), REF_INIT, SolverConfig(**overrides))
    return result, time.perf_counter() - t0
