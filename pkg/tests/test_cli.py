import json
import subprocess
import sys

import numpy as np
import pytest

from lsstereo.cli import METRIC_FIELDS, main
from lsstereo.io import read_csv, read_json, read_mask, read_pfm, read_raw_volume

RUN_OUTPUTS = {"disparity.pfm", "disparity.png", "occlusion.png", "boundary.png", "phi.pfm",
               "trace.csv", "metrics.csv", "manifest.json"}


@pytest.mark.slow
def test_synth_run_eval_smoke(cli_artifacts, tmp_path, capsys):
    scene_dir, run_dir = cli_artifacts
    assert {p.name for p in scene_dir.iterdir()} >= {"left.png", "right.png", "gt_disparity.pfm",
                                                     "gt_occlusion.png", "gt_boundary.png"}
    assert {p.name for p in run_dir.iterdir()} == RUN_OUTPUTS
    manifest = read_json(run_dir / "manifest.json")
    assert manifest["status"] == "converged"
    assert set(manifest["outputs"]) | {"manifest.json"} == RUN_OUTPUTS
    assert len(manifest["inputs"]["left"]["sha256"]) == 64
    row = read_csv(run_dir / "metrics.csv")[0]
    assert list(row) == METRIC_FIELDS and float(row["f1"]) >= 0.8
    trace = read_csv(run_dir / "trace.csv")
    assert len(trace) == manifest["iterations"]

    out = tmp_path / "m.csv"
    assert main(["eval", "--pred-disparity", str(run_dir / "disparity.pfm"),
                 "--pred-occlusion", str(run_dir / "occlusion.png"),
                 "--gt-disparity", str(scene_dir / "gt_disparity.pfm"),
                 "--gt-occlusion", str(scene_dir / "gt_occlusion.png"),
                 "--gt-boundary", str(scene_dir / "gt_boundary.png"), "--out", str(out)]) == 0
    again = read_csv(out)[0]
    assert again["f1"] == row["f1"] and again["bad4"] == row["bad4"]
    # ground truth occlusion is derived when not supplied
    assert main(["eval", "--pred-disparity", str(run_dir / "disparity.pfm"),
                 "--pred-occlusion", str(run_dir / "occlusion.png"),
                 "--gt-disparity", str(scene_dir / "gt_disparity.pfm")]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[-1].split(",")[3] == row["f1"]


def test_run_without_ground_truth(tmp_path):
    scene_dir = tmp_path / "s"
    assert main(["synth", "--width", "90", "--height", "80", "--dfg", "10", "--dbg", "3",
                 "--shape", "rect", "--out", str(scene_dir)]) == 0
    out = tmp_path / "r"
    args = ["run", "--left", str(scene_dir / "left.png"), "--right", str(scene_dir / "right.png"),
            "--dmax", "14", "--set", "max_iterations=5", "--out", str(out)]
    assert main(args) == 0
    names = {p.name for p in out.iterdir()}
    assert names == RUN_OUTPUTS - {"metrics.csv"}
    assert read_pfm(out / "disparity.pfm").shape == (80, 90)
    assert read_mask(out / "occlusion.png").shape == (80, 90)
    assert read_json(out / "manifest.json")["config"]["max_iterations"] == 5


def test_config_file_and_bad_key(tmp_path, capsys):
    scene_dir = tmp_path / "s"
    main(["synth", "--width", "60", "--height", "60", "--dfg", "6", "--dbg", "2",
          "--out", str(scene_dir)])
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("mu = 3\nmu_typo = 1\n")
    code = main(["run", "--left", str(scene_dir / "left.png"), "--right",
                 str(scene_dir / "right.png"), "--dmax", "10", "--config", str(cfg),
                 "--out", str(tmp_path / "r")])
    assert code != 0
    assert "mu_typo" in capsys.readouterr().err
    assert not (tmp_path / "r").exists()


def test_costvol_writes_volumes(tmp_path):
    scene_dir = tmp_path / "s"
    main(["synth", "--width", "50", "--height", "40", "--dfg", "6", "--dbg", "2",
          "--out", str(scene_dir)])
    out = tmp_path / "v"
    assert main(["costvol", "--left", str(scene_dir / "left.png"), "--right",
                 str(scene_dir / "right.png"), "--dmax", "10", "--out", str(out)]) == 0
    meta = json.loads((out / "volumes.json").read_text())
    assert meta["shape"] == [40, 50, 11]
    for name in meta["files"].values():
        vol = read_raw_volume(out / name, meta["shape"])
        assert vol.shape == (40, 50, 11) and np.all((vol >= 0) & (vol <= 1))


def test_missing_input_is_an_error(tmp_path, capsys):
    assert main(["costvol", "--left", str(tmp_path / "nope.png"), "--right",
                 str(tmp_path / "nope.png"), "--dmax", "4", "--out", str(tmp_path)]) == 2
    assert "error" in capsys.readouterr().err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "lsstereo", "--help"], capture_output=True,
                          text=True)
    assert proc.returncode == 0 and "synth" in proc.stdout
