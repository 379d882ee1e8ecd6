"""Windowed conformal prediction over a drifting series.

Each step's interval is calibrated on the trailing window of scores with
uniform weights, which is split conformal prediction applied per window.
A naive variant calibrates once on the first window and never refits,
which is what drift breaks.  Only point (L1) predictions appear here.

CSV interfaces: series are read from ``t,y_true,y_pred`` files and step
results are written as ``t,lo,hi,length,covered,rolling_coverage``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .calibration import Interval
from .quantile import conformal_quantile

__all__ = [
    "MODES",
    "SeriesPoint",
    "StepResult",
    "WindowConfig",
    "inject_drift",
    "length_vs_bias_profile",
    "read_series_csv",
    "run_windowed",
    "write_step_results_csv",
]

MODES = ("windowed_symmetric", "windowed_asymmetric", "naive_global_symmetric")


@dataclass(frozen=True)
class SeriesPoint:
    t: int
    y_true: float
    y_pred: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.y_true) and math.isfinite(self.y_pred)):
            raise ValueError(f"series values must be finite at t={self.t}")


@dataclass(frozen=True)
class WindowConfig:
    """Window size, miscoverage budget, and variant for one windowed run.

    ``warmup`` steps are emitted without intervals (and excluded from all
    coverage statistics); it defaults to the window size and may not be
    smaller, so every emitted step sees a full window.
    """

    window: int
    mode: str
    alpha: float | None = None
    alpha_lo: float | None = None
    alpha_hi: float | None = None
    warmup: int | None = None

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.window < 1:
            raise ValueError(f"window must be at least 1, got {self.window!r}")
        if self.mode == "windowed_asymmetric":
            if self.alpha_lo is None or self.alpha_hi is None:
                raise ValueError("windowed_asymmetric requires alpha_lo and alpha_hi")
        elif self.alpha is None:
            raise ValueError(f"{self.mode} requires alpha")
        if self.warmup is None:
            object.__setattr__(self, "warmup", self.window)
        elif self.warmup < self.window:
            raise ValueError("warmup must be at least the window size")


@dataclass(frozen=True)
class StepResult:
    t: int
    interval: Interval
    covered: bool
    length: float
    rolling_coverage: float


def inject_drift(series: Sequence[SeriesPoint], rate: float) -> list[SeriesPoint]:
    """Add ``rate * t`` to every prediction; truths untouched."""
    if not math.isfinite(rate):
        raise ValueError(f"drift rate must be finite, got {rate!r}")
    return [
        SeriesPoint(t=p.t, y_true=p.y_true, y_pred=p.y_pred + rate * p.t) for p in series
    ]


def _validate_series(series: Sequence[SeriesPoint]) -> None:
    for prev, cur in zip(series, series[1:]):
        if cur.t <= prev.t:
            raise ValueError(f"step indices must be strictly increasing (t={cur.t} after t={prev.t})")


def run_windowed(series: Sequence[SeriesPoint], config: WindowConfig) -> list[StepResult]:
    """Per-step intervals from trailing-window calibration.

    At each step past warmup the adjustment is fitted on the scores of the
    previous ``window`` steps, the interval for the current prediction is
    built, and coverage of the current truth is recorded.  The naive mode
    fits once on the first window and reuses that adjustment forever.
    """
    _validate_series(series)
    n = len(series)
    if n <= config.warmup:
        raise ValueError(
            f"series has {n} steps but warmup is {config.warmup}; nothing to emit"
        )
    k = config.window
    y = np.array([p.y_true for p in series])
    pred = np.array([p.y_pred for p in series])
    resid = pred - y  # s_lo stream; negate for s_hi; |.| for symmetric

    naive_q = None
    if config.mode == "naive_global_symmetric":
        naive_q = conformal_quantile(np.abs(resid[:k]), config.alpha)

    results: list[StepResult] = []
    covered_flags: list[bool] = []
    covered_running = 0

    for i in range(config.warmup, n):
        window = slice(i - k, i)
        p = float(pred[i])
        if config.mode == "windowed_symmetric":
            q = conformal_quantile(np.abs(resid[window]), config.alpha)
            if q.degenerate:
                interval = Interval(-math.inf, math.inf, degenerate=True)
            else:
                interval = Interval(p - q.value, p + q.value)
        elif config.mode == "windowed_asymmetric":
            q_lo = conformal_quantile(resid[window], config.alpha_lo)
            q_hi = conformal_quantile(-resid[window], config.alpha_hi)
            lo = -math.inf if q_lo.degenerate else p - q_lo.value
            hi = math.inf if q_hi.degenerate else p + q_hi.value
            interval = Interval(lo, hi, degenerate=q_lo.degenerate or q_hi.degenerate)
        else:
            if naive_q.degenerate:
                interval = Interval(-math.inf, math.inf, degenerate=True)
            else:
                interval = Interval(p - naive_q.value, p + naive_q.value)

        covered = interval.contains(float(y[i]))
        covered_flags.append(covered)
        covered_running += covered
        if len(covered_flags) > k:
            covered_running -= covered_flags[-k - 1]
        tail = min(len(covered_flags), k)
        results.append(
            StepResult(
                t=series[i].t,
                interval=interval,
                covered=covered,
                length=interval.length,
                rolling_coverage=covered_running / tail,
            )
        )
    return results


def length_vs_bias_profile(
    results: Sequence[StepResult], drift_rate: float
) -> list[tuple[float, float]]:
    """Pair each step's injected bias (rate * t) with its interval length."""
    return [(drift_rate * r.t, r.length) for r in results]


def read_series_csv(path: str | Path) -> list[SeriesPoint]:
    """Load a ``t,y_true,y_pred`` series file."""
    series: list[SeriesPoint] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"t", "y_true", "y_pred"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(f"{path}: expected header with columns t,y_true,y_pred")
        for row in reader:
            try:
                series.append(
                    SeriesPoint(
                        t=int(row["t"]),
                        y_true=float(row["y_true"]),
                        y_pred=float(row["y_pred"]),
                    )
                )
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path}: bad series row {row!r}: {exc}") from None
    if not series:
        raise ValueError(f"{path}: series file holds no rows")
    _validate_series(series)
    return series


def write_step_results_csv(path: str | Path, results: Sequence[StepResult]) -> None:
    """Write step results as ``t,lo,hi,length,covered,rolling_coverage``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "lo", "hi", "length", "covered", "rolling_coverage"])
        for r in results:
            writer.writerow(
                [
                    r.t,
                    repr(r.interval.lo),
                    repr(r.interval.hi),
                    repr(r.length),
                    int(r.covered),
                    repr(r.rolling_coverage),
                ]
            )
