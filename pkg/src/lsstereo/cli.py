"""Command-line entry point: ``lsstereo {run,synth,eval,costvol}``."""

import argparse
import csv
import logging
import os
import sys
import time

import numpy as np

from . import __version__
from . import io as lio
from .errors import FormatError, InvalidInputError, NumericalInstabilityError
from .evaluation import bad4, boundary_from_disparity, build_eval_region, occlusion_f1
from .signals import (EDGE_THRESHOLD, OCCLUSION_SMOOTHING, OCCLUSION_THRESHOLD, ImagePair,
                      build_matching_cost, build_monocular_boundary_cost,
                      build_occlusion_boundary_cost)
from .solver import SolverConfig, StereoInputs, parse_config_text, run
from .synthetic import Ellipse, Rectangle, generate_scene

log = logging.getLogger("lsstereo")

METRIC_FIELDS = ["scene_id", "precision", "recall", "f1", "bad4", "iterations", "wall_time"]
TRACE_FIELDS = ["iteration", "energy", "boundary_change", "foreground_pixels",
                "background_pixels", "occluded_pixels"]


def _floats(text, n, name):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{name}: expected {n} comma-separated numbers") from None
    if len(vals) != n:
        raise argparse.ArgumentTypeError(f"{name}: expected {n} comma-separated numbers")
    return vals


def _ellipse_arg(text):
    return _floats(text, 4, "--init-ellipse")


def _key_value(text):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    k, v = text.split("=", 1)
    return k.strip(), v.strip()


def load_config(path=None, overrides=()):
    """Config file values, then ``key=value`` overrides; unknown keys are errors."""
    values = {}
    if path is not None:
        with open(path) as fh:
            values.update(parse_config_text(fh.read()))
    values.update(dict(overrides))
    return SolverConfig.from_mapping(values)


def compute_inputs(pair, edge_threshold, occlusion_threshold):
    C = build_matching_cost(pair)
    return StereoInputs(C, build_monocular_boundary_cost(pair, edge_threshold),
                        build_occlusion_boundary_cost(C, occlusion_threshold))


def metrics_row(scene_id, predicted_occ, disparity, gt_disparity, gt_boundary=None,
                gt_occlusion=None, iterations="", wall_time=""):
    if gt_boundary is None:
        gt_boundary = boundary_from_disparity(gt_disparity)
    region = build_eval_region(gt_boundary, gt_disparity, gt_occlusion)
    scores = occlusion_f1(predicted_occ, region)
    return {"scene_id": scene_id, **scores, "bad4": bad4(disparity, region),
            "iterations": iterations, "wall_time": wall_time}


# ---------------------------------------------------------------- subcommands

def cmd_run(args):
    t0 = time.perf_counter()
    cfg = load_config(args.config, args.set)
    scene = lio.load_scene(args.left, args.right, args.gt_disparity, args.gt_boundary,
                           args.gt_occlusion, args.gt_view)
    pair = ImagePair(scene.left, scene.right, args.dmax)
    h, w = pair.shape
    init = args.init_ellipse or (w / 2.0, h / 2.0, w / 4.0, h / 4.0)
    inputs = compute_inputs(pair, args.edge_threshold, args.occlusion_threshold)
    result = run(inputs, tuple(init), cfg)
    wall = time.perf_counter() - t0

    os.makedirs(args.out, exist_ok=True)
    out = lambda name: os.path.join(args.out, name)  # noqa: E731
    disp_png, png_scale = lio.disparity_png(result.disparity, args.dmax)
    lio.write_pfm(result.disparity, out("disparity.pfm"))
    lio.write_png(disp_png, out("disparity.png"))
    lio.write_mask(result.occlusion, out("occlusion.png"))
    lio.write_png(lio.boundary_overlay(scene.left, result.phi), out("boundary.png"))
    lio.write_pfm(result.phi, out("phi.pfm"))
    lio.write_csv(result.trace, out("trace.csv"), TRACE_FIELDS)
    outputs = ["disparity.pfm", "disparity.png", "occlusion.png", "boundary.png", "phi.pfm",
               "trace.csv"]

    metrics = None
    if scene.gt_disparity is not None:
        metrics = metrics_row(args.scene_id or os.path.basename(os.path.normpath(args.out)),
                              result.occlusion, result.disparity, scene.gt_disparity,
                              scene.gt_boundary, scene.gt_occlusion, result.iterations,
                              round(wall, 3))
        lio.write_csv([metrics], out("metrics.csv"), METRIC_FIELDS)
        outputs.append("metrics.csv")

    manifest = {
        "version": __version__,
        "config": cfg.as_dict(),
        "d_max": args.dmax,
        "init_ellipse": list(init),
        "edge_threshold": args.edge_threshold,
        "occlusion_threshold": args.occlusion_threshold,
        "occlusion_smoothing": list(OCCLUSION_SMOOTHING),
        "inputs": {k: {"path": p, "sha256": lio.sha256_file(p)} for k, p in scene.paths.items()},
        "outputs": outputs,
        "trace": "trace.csv",
        "disparity_png_scale": png_scale,
        "status": result.status,
        "iterations": result.iterations,
        "theta1": result.theta1.coeffs.tolist(),
        "theta2": result.theta2.coeffs.tolist(),
        "shape_frame": list(result.theta1.frame),
        "metrics": metrics,
        **scene.meta,
    }
    lio.write_json(manifest, out("manifest.json"))
    print(f"{result.status} after {result.iterations} iterations ({wall:.1f} s); "
          f"outputs in {args.out}")
    if metrics is not None:
        print(f"occlusion F1 {metrics['f1']:.4f}  bad-4.0 {metrics['bad4']:.4f}")
    return 0


def cmd_synth(args):
    if args.shape == "ellipse":
        spec = Ellipse(args.width / 2.0, args.height / 2.0, args.width * 0.275, args.height * 0.225)
    else:
        spec = Rectangle(int(args.width * 0.25), int(args.height * 0.3),
                         int(args.width * 0.75) - 1, int(args.height * 0.7) - 1)
    scene = generate_scene(args.width, args.height, args.dfg, args.dbg, spec, args.seed,
                           d_max=args.dmax)
    os.makedirs(args.out, exist_ok=True)
    out = lambda name: os.path.join(args.out, name)  # noqa: E731
    lio.write_image(scene.pair.left, out("left.png"))
    lio.write_image(scene.pair.right, out("right.png"))
    lio.write_pfm(scene.gt_disparity, out("gt_disparity.pfm"))
    lio.write_mask(scene.gt_occlusion, out("gt_occlusion.png"))
    lio.write_mask(scene.gt_boundary, out("gt_boundary.png"))
    lio.write_mask(scene.fg_mask, out("fg_mask.png"))
    lio.write_json({
        "width": args.width, "height": args.height, "d_fg": args.dfg, "d_bg": args.dbg,
        "d_max": scene.pair.d_max, "shape": args.shape, "mask": vars(spec), "seed": args.seed,
        "gt_view": "cyclopean",
        "files": ["left.png", "right.png", "gt_disparity.pfm", "gt_occlusion.png",
                  "gt_boundary.png", "fg_mask.png"],
    }, out("scene.json"))
    print(f"scene written to {args.out} (d_max {scene.pair.d_max})")
    return 0


def cmd_eval(args):
    disparity = lio.read_pfm(args.pred_disparity).astype(np.float64)
    occ = lio.read_mask(args.pred_occlusion)
    scene_gt = lio.read_pfm(args.gt_disparity).astype(np.float64)
    if args.gt_view == "left":
        scene_gt, _ = lio.left_to_cyclopean(scene_gt)
    bnd = lio.read_mask(args.gt_boundary) if args.gt_boundary else None
    gocc = lio.read_mask(args.gt_occlusion) if args.gt_occlusion else None
    row = metrics_row(args.scene_id, occ, disparity, scene_gt, bnd, gocc)
    if args.out == "-":
        w = csv.DictWriter(sys.stdout, METRIC_FIELDS, lineterminator="\n")
        w.writeheader()
        w.writerow(row)
    else:
        lio.write_csv([row], args.out, METRIC_FIELDS)
        print(f"occlusion F1 {row['f1']:.4f}  bad-4.0 {row['bad4']:.4f} -> {args.out}")
    return 0


def cmd_costvol(args):
    left, right = lio.read_image(args.left), lio.read_image(args.right)
    pair = ImagePair(left, right, args.dmax)
    inputs = compute_inputs(pair, args.edge_threshold, args.occlusion_threshold)
    os.makedirs(args.out, exist_ok=True)
    names = {"matching": inputs.matching, "monocular_boundary": inputs.monocular,
             "occlusion_boundary": inputs.occlusion}
    for name, vol in names.items():
        lio.write_raw_volume(vol.values, os.path.join(args.out, name + ".f32"))
    lio.write_json({
        "shape": list(inputs.matching.values.shape),
        "axes": ["y", "x", "d"],
        "dtype": "float32",
        "byte_order": "little",
        "order": "C",
        "files": {name: name + ".f32" for name in names},
        "d_max": args.dmax,
        "edge_threshold": args.edge_threshold,
        "occlusion_threshold": args.occlusion_threshold,
        "occlusion_smoothing": list(OCCLUSION_SMOOTHING),
        "inputs": {"left": lio.sha256_file(args.left), "right": lio.sha256_file(args.right)},
    }, os.path.join(args.out, "volumes.json"))
    print(f"volumes {inputs.matching.values.shape} written to {args.out}")
    return 0


# ---------------------------------------------------------------- parser

def build_parser():
    p = argparse.ArgumentParser(prog="lsstereo", description=(
        "Figure-ground stereo with level sets, global disparity shapes and occlusion geometry."))
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def thresholds(sp):
        sp.add_argument("--edge-threshold", type=float, default=EDGE_THRESHOLD,
                        help="Sobel magnitude threshold for monocular edges")
        sp.add_argument("--occlusion-threshold", type=float, default=OCCLUSION_THRESHOLD,
                        help="threshold on the smoothed epipolar gradient of the cost volume")

    r = sub.add_parser("run", help="estimate disparity and occlusions for a pair")
    r.add_argument("--left", required=True)
    r.add_argument("--right", required=True)
    r.add_argument("--dmax", type=int, required=True)
    r.add_argument("--init-ellipse", type=_ellipse_arg, metavar="CX,CY,A,B")
    r.add_argument("--config")
    r.add_argument("--set", type=_key_value, action="append", default=[], metavar="KEY=VALUE",
                   help="override a config value (repeatable)")
    r.add_argument("--out", required=True)
    r.add_argument("--gt-disparity")
    r.add_argument("--gt-boundary")
    r.add_argument("--gt-occlusion")
    r.add_argument("--gt-view", choices=("cyclopean", "left"), default="cyclopean")
    r.add_argument("--scene-id")
    thresholds(r)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("synth", help="write a random-dot scene with ground truth")
    s.add_argument("--width", type=int, default=200)
    s.add_argument("--height", type=int, default=200)
    s.add_argument("--dfg", type=float, default=20.0)
    s.add_argument("--dbg", type=float, default=5.0)
    s.add_argument("--dmax", type=int)
    s.add_argument("--shape", choices=("ellipse", "rect"), default="ellipse")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)

    e = sub.add_parser("eval", help="score a disparity map and occlusion mask")
    e.add_argument("--pred-disparity", required=True)
    e.add_argument("--pred-occlusion", required=True)
    e.add_argument("--gt-disparity", required=True)
    e.add_argument("--gt-boundary")
    e.add_argument("--gt-occlusion")
    e.add_argument("--gt-view", choices=("cyclopean", "left"), default="cyclopean")
    e.add_argument("--scene-id", default="scene")
    e.add_argument("--out", default="-", help="CSV path, '-' for stdout")
    e.set_defaults(func=cmd_eval)

    c = sub.add_parser("costvol", help="write the three cost volumes")
    c.add_argument("--left", required=True)
    c.add_argument("--right", required=True)
    c.add_argument("--dmax", type=int, required=True)
    c.add_argument("--out", required=True)
    thresholds(c)
    c.set_defaults(func=cmd_costvol)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InvalidInputError, FormatError, NumericalInstabilityError, OSError) as exc:
        print(f"lsstereo {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
