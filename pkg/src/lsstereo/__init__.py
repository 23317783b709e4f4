"""Figure-ground stereo: a level-set boundary, quadratic disparity shapes per
layer, and the occlusion band implied by the disparity jump between them."""

__version__ = "0.1.0"

from .errors import FormatError, InvalidInputError, NumericalInstabilityError  # noqa: E402
from .geometry import ShapeModel, compose_disparity, compute_delta_theta, predict_occlusion  # noqa: E402
from .signals import (CostVolume, ImagePair, build_matching_cost,  # noqa: E402
                      build_monocular_boundary_cost, build_occlusion_boundary_cost)
from .solver import SolverConfig, StereoInputs, run  # noqa: E402
from .synthetic import Ellipse, Rectangle, generate_scene  # noqa: E402

__all__ = [
    "CostVolume", "Ellipse", "FormatError", "ImagePair", "InvalidInputError",
    "NumericalInstabilityError", "Rectangle", "ShapeModel", "SolverConfig", "StereoInputs",
    "build_matching_cost", "build_monocular_boundary_cost", "build_occlusion_boundary_cost",
    "compose_disparity", "compute_delta_theta", "generate_scene", "predict_occlusion", "run",
]
