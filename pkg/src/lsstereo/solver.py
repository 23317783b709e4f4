"""Alternating descent over the foreground boundary and the two layer shapes."""

import logging
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .errors import InvalidInputError, NumericalInstabilityError
from .geometry import (ShapeModel, compose_disparity, compute_delta_theta, normalized_frame,
                       predict_occlusion)
from .hierarchy import (Consensus, build_hierarchy, distributed_fit_shapes, downward_consensus,
                        fit_shapes, reset_validity, update_messages, upward_costs,
                        upward_validity)
from .levelset import evaluate_energy, init_ellipse, reinitialize, update_phi

log = logging.getLogger(__name__)

CONVERGED = "converged"
MAX_ITERATIONS = "max-iterations"
DEGENERATE = "degenerate-boundary"


@dataclass
class SolverConfig:
    dt: float = 0.2
    alpha1: float = 0.2
    alpha2: float = 0.8
    alpha3: float = 0.1
    mu: float = 4.0
    beta: float = None  # 0.4 / d_max when unset
    epsilon: float = 1.5
    reinit_every: int = 10
    median_window: int = 7
    time_scale: float = 100.0
    max_iterations: int = 300
    stop_tolerance: float = 1e-3
    stop_patience: int = 10
    num_levels: int = 4
    shape_fit: str = "central"
    averaging_rounds: int = 200

    def __post_init__(self):
        for name in ("dt", "alpha3", "epsilon", "reinit_every", "median_window",
                     "time_scale", "max_iterations", "stop_tolerance", "stop_patience",
                     "num_levels", "averaging_rounds"):
            if not getattr(self, name) > 0:
                raise InvalidInputError(f"{name} must be positive")
        for name in ("alpha1", "alpha2", "mu"):
            if getattr(self, name) < 0:
                raise InvalidInputError(f"{name} must be non-negative")
        if self.beta is not None and self.beta < 0:
            raise InvalidInputError("beta must be non-negative")
        if self.median_window % 2 != 1:
            raise InvalidInputError("median_window must be odd")
        if self.shape_fit not in ("central", "distributed"):
            raise InvalidInputError("shape_fit must be 'central' or 'distributed'")

    def beta_for(self, d_max):
        return 0.4 / d_max if self.beta is None else self.beta

    @classmethod
    def from_mapping(cls, values):
        """Build a config from string or typed values keyed by field name."""
        types = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            if key not in types:
                raise InvalidInputError(f"unknown config key {key!r}")
            kwargs[key] = _coerce(key, raw, cls.__dataclass_fields__[key].default)
        return cls(**kwargs)

    def as_dict(self):
        return asdict(self)


def _coerce(key, raw, default):
    if not isinstance(raw, str):
        return raw
    try:
        if key == "beta":
            return None if raw.strip().lower() in ("", "none", "auto") else float(raw)
        if isinstance(default, bool):
            return raw.strip().lower() in ("1", "true", "yes")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError as exc:
        raise InvalidInputError(f"bad value for {key!r}: {raw!r}") from exc
    return raw.strip()


def parse_config_text(text):
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInputError(f"config line {lineno}: expected key=value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key] = value
    return values


@dataclass(frozen=True)
class StereoInputs:
    """The three precomputed driving volumes."""

    matching: object
    monocular: object
    occlusion: object

    @property
    def d_max(self):
        return self.matching.d_max

    @property
    def shape(self):
        return self.matching.shape[:2]


@dataclass
class SolverState:
    phi: np.ndarray
    theta1: ShapeModel
    theta2: ShapeModel
    hierarchy: object
    delta_theta: np.ndarray
    consensus: Consensus = None
    iteration: int = 0
    iterations_since_reinit: int = 0
    energy_trace: list = field(default_factory=list)
    boundary_change_trace: list = field(default_factory=list)
    trace: list = field(default_factory=list)


def init_state(inputs, phi0, cfg):
    h, w = inputs.shape
    if phi0.shape != (h, w):
        raise InvalidInputError("initial phi does not match the cost volume")
    frame = normalized_frame(h, w)
    start = ShapeModel.constant(inputs.d_max / 2.0, frame)
    return SolverState(
        phi=np.array(phi0, dtype=float),
        theta1=start,
        theta2=start,
        hierarchy=build_hierarchy(w, h, cfg.num_levels, inputs.d_max),
        delta_theta=np.zeros((h, w)),
    )


def step(state, inputs, cfg):
    """One alternation round; mutates and returns ``state``.

    Messages and validity, consensus, shape fit, occlusion shift, boundary
    descent with median filtering, and periodic reinitialization.
    """
    d_max = inputs.d_max
    C = inputs.matching
    h = state.hierarchy
    if state.iteration == 0:
        reset_validity(h)
        D = None
    else:
        upward_validity(h, state.phi, state.delta_theta)
        D = compose_disparity(state.theta1, state.theta2, state.phi, d_max)
    upward_costs(h, C, D, cfg.beta_for(d_max))
    update_messages(h)
    state.consensus = downward_consensus(h)

    occluded = predict_occlusion(state.phi, state.delta_theta)
    previous = (state.theta1, state.theta2)
    if cfg.shape_fit == "distributed":
        fit1, fit2 = distributed_fit_shapes(h, state.consensus, state.phi, cfg.averaging_rounds,
                                            occluded, previous)
        theta1, theta2 = fit1.theta, fit2.theta
    else:
        theta1, theta2 = fit_shapes(state.consensus, state.phi, occluded, previous)
    state.theta1 = theta1 if theta1 is not None else previous[0]
    state.theta2 = theta2 if theta2 is not None else previous[1]

    delta_theta = compute_delta_theta(state.theta1, state.theta2, state.phi, d_max)
    old_fg = state.phi > 0
    phi = update_phi(state.phi, C, inputs.monocular, inputs.occlusion, state.theta1,
                     state.theta2, cfg, delta_theta=delta_theta)
    state.iteration += 1
    state.iterations_since_reinit += 1
    if state.iterations_since_reinit >= cfg.reinit_every:
        phi = reinitialize(phi)
        state.iterations_since_reinit = 0
    state.phi = phi
    state.delta_theta = compute_delta_theta(state.theta1, state.theta2, phi, d_max)

    energy = evaluate_energy(C, inputs.monocular, inputs.occlusion, state.theta1, state.theta2,
                             phi, cfg, state.delta_theta)
    if not np.isfinite(energy):
        raise NumericalInstabilityError(f"energy became non-finite at iteration {state.iteration}")
    fg = phi > 0
    change = float(np.mean(fg != old_fg))
    occ = predict_occlusion(phi, state.delta_theta)
    state.energy_trace.append(energy)
    state.boundary_change_trace.append(change)
    state.trace.append({
        "iteration": state.iteration,
        "energy": energy,
        "boundary_change": change,
        "foreground_pixels": int(fg.sum()),
        "background_pixels": int((~fg).sum()),
        "occluded_pixels": int(occ.sum()),
    })
    return state


@dataclass
class RunResult:
    disparity: np.ndarray
    occlusion: np.ndarray
    phi: np.ndarray
    theta1: ShapeModel
    theta2: ShapeModel
    consensus: Consensus
    trace: list
    status: str
    iterations: int

    @property
    def energy_trace(self):
        return [r["energy"] for r in self.trace]

    @property
    def boundary_change_trace(self):
        return [r["boundary_change"] for r in self.trace]


def run(inputs, init, cfg=None, callback=None):
    """Iterate ``step`` from an elliptical boundary until the labels settle.

    ``init`` is ``(cx, cy, a, b)`` in pixels. The run stops once the fraction
    of pixels whose sign differs from ``reinit_every`` iterations earlier
    stays below ``stop_tolerance`` for ``stop_patience`` consecutive
    iterations, or after ``max_iterations``. Comparing across one full
    reinitialization cycle ignores the small periodic flicker that the reset
    to a distance function causes once the contour has settled.
    """
    cfg = cfg or SolverConfig()
    h, w = inputs.shape
    cx, cy, a, b = init
    state = init_state(inputs, init_ellipse(w, h, (cx, cy), (a, b)), cfg)
    status = MAX_ITERATIONS
    labels = [state.phi > 0]
    calm = 0
    while state.iteration < cfg.max_iterations:
        step(state, inputs, cfg)
        fg = state.phi > 0
        if fg.all() or not fg.any():
            status = DEGENERATE
            log.warning("boundary vanished at iteration %d", state.iteration)
            break
        labels = (labels + [fg])[-cfg.reinit_every - 1:]
        settled = (len(labels) > cfg.reinit_every
                   and np.mean(labels[0] != labels[-1]) < cfg.stop_tolerance)
        calm = calm + 1 if settled else 0
        if callback is not None:
            callback(state)
        if calm >= cfg.stop_patience:
            status = CONVERGED
            break
    disparity = compose_disparity(state.theta1, state.theta2, state.phi, inputs.d_max)
    occlusion = predict_occlusion(state.phi, state.delta_theta)
    return RunResult(disparity, occlusion, state.phi, state.theta1, state.theta2,
                     state.consensus, state.trace, status, state.iteration)
