"""Estimating the effective scalar bias of a predictor.

The effective bias is the shift that minimizes the worst symmetric
interval length over the calibration set itself.  For constant-bias data
that objective is a translated absolute-value function, so subgradient
descent with a decaying step recovers the shift; an exhaustive grid scan
serves as the independent check.

The objective is evaluated through a precomputed cache of per-record
adjustment points: shifting every prediction by ``-c`` shifts both
adjustment points by ``-c`` exactly (order statistics translate), so one
scoring pass supports any number of trial shifts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .quantile import conformal_quantile
from .scores import PredictionRecord, ScoreSpec, adjustment_arrays

__all__ = [
    "BiasEstimate",
    "OptimizerConfig",
    "SymmetricLengthObjective",
    "estimate_bias",
    "grid_oracle",
    "mean_bias",
    "objective",
    "refined_grid_oracle",
]

# The step stays constant while the objective is still improving and decays
# as 1/sqrt(k) only after this many consecutive non-improving iterations.
# Constant-step subgradient descent on |.| oscillates with amplitude
# proportional to the step, so a stall means the bottom has been reached;
# decaying any earlier risks arriving there with steps too small to cross
# the piecewise-linear teeth toward the minimum.
_FLAT_ITERATIONS = 10

# Guards the grid point count against float truncation of (hi - lo) / step.
_GRID_EPS = 1e-9


@dataclass(frozen=True)
class OptimizerConfig:
    """Knobs for the subgradient descent in :func:`estimate_bias`.

    ``init`` is one of the strings ``"mean_difference"`` or ``"zero"``, or
    an explicit float starting point.  ``schedule="constant"`` keeps the
    step size fixed at ``learning_rate`` throughout (useful for checking
    the plain constant-step behaviour); the default holds it constant while
    the objective still improves, then decays it as
    ``learning_rate / sqrt(k + 1)`` once ten consecutive iterations have
    gone flat.
    """

    learning_rate: float = 0.1
    tolerance: float = 1e-8
    max_iterations: int = 20_000
    init: str | float = "mean_difference"
    schedule: str = "sqrt_decay"
    record_trace: bool = False

    def __post_init__(self) -> None:
        if not (math.isfinite(self.learning_rate) and self.learning_rate > 0):
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate!r}")
        if not (math.isfinite(self.tolerance) and self.tolerance > 0):
            raise ValueError(f"tolerance must be positive, got {self.tolerance!r}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be at least 1, got {self.max_iterations!r}")
        if isinstance(self.init, str):
            if self.init not in ("mean_difference", "zero"):
                raise ValueError(f"unknown init {self.init!r}")
        elif not math.isfinite(self.init):
            raise ValueError(f"explicit init must be finite, got {self.init!r}")
        if self.schedule not in ("sqrt_decay", "constant"):
            raise ValueError(f"unknown schedule {self.schedule!r}")


@dataclass(frozen=True)
class BiasEstimate:
    """Result of a bias fit: the shift, the objective there, and how it went."""

    b_eff: float
    iterations: int
    final_objective: float
    converged: bool
    trace: tuple[tuple[float, float], ...] | None = None


class SymmetricLengthObjective:
    """Worst symmetric interval length over a calibration set, as a function of the trial shift.

    Callable: ``obj(c)`` equals fitting a symmetric calibration on the set
    with every prediction shifted by ``-c`` and taking the maximum interval
    length over the same records.  Degenerate (infinite-quantile)
    configurations evaluate to ``+inf`` for every ``c``.
    """

    def __init__(self, cal: Sequence[PredictionRecord], spec: ScoreSpec, alpha: float):
        y, f_lo, f_hi = adjustment_arrays(cal, spec)
        self._s_lo = f_lo - y
        self._s_hi = y - f_hi
        self._band_max = float(np.max(f_hi - f_lo))
        self._alpha = alpha

    def __call__(self, c: float) -> float:
        q = conformal_quantile(np.maximum(self._s_lo - c, self._s_hi + c), self._alpha)
        if q.degenerate:
            return math.inf
        return self._band_max + 2.0 * q.value


def objective(
    cal: Sequence[PredictionRecord], spec: ScoreSpec, alpha: float, c: float
) -> float:
    """Maximum symmetric interval length over ``cal`` after shifting predictions by ``-c``."""
    return SymmetricLengthObjective(cal, spec, alpha)(c)


def mean_bias(cal: Sequence[PredictionRecord]) -> float:
    """Mean difference between the prediction payload mean and the ground truth."""
    if len(cal) == 0:
        raise ValueError("calibration set must be non-empty")
    total = 0.0
    for rec in cal:
        pred = rec.point if rec.is_point else float(np.mean(rec.samples))
        total += pred - rec.y_true
    return total / len(cal)


def _initial_point(cal: Sequence[PredictionRecord], config: OptimizerConfig) -> float:
    if config.init == "mean_difference":
        return mean_bias(cal)
    if config.init == "zero":
        return 0.0
    return float(config.init)


def estimate_bias(
    cal: Sequence[PredictionRecord],
    spec: ScoreSpec,
    alpha: float,
    config: OptimizerConfig = OptimizerConfig(),
) -> BiasEstimate:
    """Minimize the worst symmetric interval length by subgradient descent.

    The subgradient is a central finite difference with step
    ``h = max(1e-4, 1e-6 * |b|)`` (the objective is piecewise linear, so
    analytic gradients do not exist at its kinks).  Iteration stops when the
    objective change drops below ``config.tolerance`` or after
    ``config.max_iterations`` steps; the best shift seen is returned either
    way, with ``converged`` recording which exit fired.

    A small-objective-change stop alone would misfire when two iterates
    straddle the minimum symmetrically (the objective ties exactly while the
    iterate is a full step away), so convergence additionally requires the
    last step taken to be negligible.
    """
    obj = SymmetricLengthObjective(cal, spec, alpha)
    b = _initial_point(cal, config)
    f_b = obj(b)
    if math.isinf(f_b):
        raise ValueError(
            "objective is infinite at the initial point (degenerate calibration); "
            "try init='zero', a larger calibration set, or a larger alpha"
        )

    best_b, best_f = b, f_b
    trace: list[tuple[float, float]] | None = [(b, f_b)] if config.record_trace else None
    converged = False
    iterations = 0
    flat_streak = 0
    decay_start: int | None = None

    for k in range(config.max_iterations):
        if config.schedule == "constant" or decay_start is None:
            gamma = config.learning_rate
        else:
            gamma = config.learning_rate / math.sqrt(k - decay_start + 1)
        h = max(1e-4, 1e-6 * abs(b))
        g = (obj(b + h) - obj(b - h)) / (2.0 * h)

        f_prev = f_b
        step = gamma * g
        b = b - step
        f_b = obj(b)
        iterations = k + 1
        if trace is not None:
            trace.append((b, f_b))
        if f_b < best_f - config.tolerance:
            flat_streak = 0
        else:
            flat_streak += 1
            if decay_start is None and flat_streak >= _FLAT_ITERATIONS:
                decay_start = k
        if f_b < best_f:
            best_b, best_f = b, f_b
        if abs(f_prev - f_b) < config.tolerance and abs(step) <= h:
            converged = True
            break

    return BiasEstimate(
        b_eff=best_b,
        iterations=iterations,
        final_objective=best_f,
        converged=converged,
        trace=tuple(trace) if trace is not None else None,
    )


def _scan(
    obj: SymmetricLengthObjective, lo: float, hi: float, step: float
) -> tuple[np.ndarray, np.ndarray]:
    if not lo < hi:
        raise ValueError(f"grid needs lo < hi, got [{lo}, {hi}]")
    if not (math.isfinite(step) and step > 0):
        raise ValueError(f"grid step must be positive, got {step!r}")
    count = int(math.floor((hi - lo) / step + _GRID_EPS)) + 1
    grid = lo + step * np.arange(count)
    values = np.array([obj(c) for c in grid])
    return grid, values


def grid_oracle(
    cal: Sequence[PredictionRecord],
    spec: ScoreSpec,
    alpha: float,
    lo: float,
    hi: float,
    step: float,
) -> tuple[float, float]:
    """Exhaustive scan of the bias objective over a uniform grid.

    Returns ``(b_star, objective_star)`` where ``b_star`` is the smallest
    grid point whose objective lies within 1e-12 of the grid minimum.
    """
    obj = SymmetricLengthObjective(cal, spec, alpha)
    grid, values = _scan(obj, lo, hi, step)
    i = int(np.argmax(values <= values.min() + 1e-12))
    return float(grid[i]), float(values[i])


def refined_grid_oracle(
    cal: Sequence[PredictionRecord],
    spec: ScoreSpec,
    alpha: float,
    lo: float,
    hi: float,
    coarse_step: float,
    fine_step: float,
) -> tuple[float, float]:
    """Coarse scan followed by fine scans over every near-tied basin.

    The objective is 2-Lipschitz in the shift, so a coarse sample can sit at
    most ``2 * coarse_step`` above its basin's bottom; refining only the
    single best coarse point could therefore miss a global minimum whose
    basin ties the winner's to within sampling error.  Every coarse point
    within a Lipschitz-derived margin of the coarse minimum gets a fine scan
    (contiguous candidates are merged into one window first).
    """
    if not fine_step < coarse_step:
        raise ValueError("fine_step must be smaller than coarse_step")
    obj = SymmetricLengthObjective(cal, spec, alpha)
    grid, values = _scan(obj, lo, hi, coarse_step)
    margin = 4.0 * coarse_step
    candidates = grid[values <= values.min() + margin]

    windows: list[tuple[float, float]] = []
    for c in candidates:
        w_lo, w_hi = c - coarse_step, c + coarse_step
        if windows and w_lo <= windows[-1][1]:
            windows[-1] = (windows[-1][0], w_hi)
        else:
            windows.append((w_lo, w_hi))

    best_b = None
    best_f = math.inf
    for w_lo, w_hi in windows:
        w_grid, w_values = _scan(obj, w_lo, w_hi, fine_step)
        i = int(np.argmax(w_values <= w_values.min() + 1e-12))
        if w_values[i] < best_f - 1e-12 or (
            abs(w_values[i] - best_f) <= 1e-12 and w_grid[i] < best_b
        ):
            best_b, best_f = float(w_grid[i]), float(w_values[i])
    return best_b, best_f
