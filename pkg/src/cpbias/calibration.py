"""Fitting adjustments, building prediction intervals, and measuring coverage.

A symmetric calibration widens the model band by a single conformal
quantile ``q`` on both sides; an asymmetric calibration moves each side by
its own quantile ``(q_lo, q_hi)`` fitted on the signed score streams.
Negative adjustments are legal (they shrink inside the model band) and can
in pathological cases invert an interval; inverted intervals are reported
with their raw endpoints plus an ``is_empty`` flag, and the clamped length
is available separately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .quantile import conformal_quantile
from .scores import PredictionRecord, ScoreSpec, adjustment_arrays, adjustment_points

__all__ = [
    "AsymmetricCalibration",
    "Interval",
    "SymmetricCalibration",
    "empirical_coverage",
    "fit_asymmetric",
    "fit_symmetric",
    "predict_interval_asymmetric",
    "predict_interval_symmetric",
    "shift_records",
]


@dataclass(frozen=True)
class Interval:
    """Closed prediction interval [lo, hi].

    ``length`` is the raw signed length ``hi - lo`` (negative when the
    interval inverted); ``clamped_length`` floors it at zero.  ``degenerate``
    marks endpoints that came from an infinite adjustment.
    """

    lo: float
    hi: float
    degenerate: bool = False

    @property
    def length(self) -> float:
        return self.hi - self.lo

    @property
    def is_empty(self) -> bool:
        return self.hi < self.lo

    @property
    def clamped_length(self) -> float:
        return max(self.length, 0.0)

    def contains(self, y: float) -> bool:
        return self.lo <= y <= self.hi


@dataclass(frozen=True)
class SymmetricCalibration:
    """Fitted symmetric adjustment; immutable once fitted."""

    q: float
    alpha: float
    n: int
    degenerate: bool


@dataclass(frozen=True)
class AsymmetricCalibration:
    """Fitted lower/upper adjustment pair; degenerate if either side is."""

    q_lo: float
    q_hi: float
    alpha_lo: float
    alpha_hi: float
    n: int
    degenerate: bool


def _score_streams(
    cal: Sequence[PredictionRecord], spec: ScoreSpec
) -> tuple[np.ndarray, np.ndarray]:
    """Signed lower/upper score streams (s_lo, s_hi) for a calibration set."""
    if len(cal) == 0:
        raise ValueError("calibration set must be non-empty")
    y, f_lo, f_hi = adjustment_arrays(cal, spec)
    return f_lo - y, y - f_hi


def fit_symmetric(
    cal: Sequence[PredictionRecord], spec: ScoreSpec, alpha: float
) -> SymmetricCalibration:
    """Fit the symmetric adjustment: the conformal quantile of max(s_lo, s_hi)."""
    s_lo, s_hi = _score_streams(cal, spec)
    q = conformal_quantile(np.maximum(s_lo, s_hi), alpha)
    return SymmetricCalibration(q=q.value, alpha=alpha, n=len(cal), degenerate=q.degenerate)


def fit_asymmetric(
    cal: Sequence[PredictionRecord], spec: ScoreSpec, alpha_lo: float, alpha_hi: float
) -> AsymmetricCalibration:
    """Fit lower and upper adjustments independently on the signed streams."""
    s_lo, s_hi = _score_streams(cal, spec)
    q_lo = conformal_quantile(s_lo, alpha_lo)
    q_hi = conformal_quantile(s_hi, alpha_hi)
    return AsymmetricCalibration(
        q_lo=q_lo.value,
        q_hi=q_hi.value,
        alpha_lo=alpha_lo,
        alpha_hi=alpha_hi,
        n=len(cal),
        degenerate=q_lo.degenerate or q_hi.degenerate,
    )


def predict_interval_symmetric(
    test: PredictionRecord, calib: SymmetricCalibration, spec: ScoreSpec
) -> Interval:
    """[f_lo - q, f_hi + q]; length is the model band plus 2q."""
    f_lo, f_hi = adjustment_points(test, spec)
    if calib.degenerate:
        return Interval(lo=-math.inf, hi=math.inf, degenerate=True)
    return Interval(lo=f_lo - calib.q, hi=f_hi + calib.q)


def predict_interval_asymmetric(
    test: PredictionRecord, calib: AsymmetricCalibration, spec: ScoreSpec
) -> Interval:
    """[f_lo - q_lo, f_hi + q_hi]; length is the model band plus q_lo + q_hi."""
    f_lo, f_hi = adjustment_points(test, spec)
    lo = -math.inf if math.isinf(calib.q_lo) else f_lo - calib.q_lo
    hi = math.inf if math.isinf(calib.q_hi) else f_hi + calib.q_hi
    return Interval(lo=lo, hi=hi, degenerate=calib.degenerate)


def empirical_coverage(
    tests: Sequence[PredictionRecord], intervals: Sequence[Interval]
) -> float:
    """Fraction of records whose y_true lies in the closed interval."""
    if len(tests) != len(intervals):
        raise ValueError(
            f"got {len(tests)} records but {len(intervals)} intervals; they must align"
        )
    if len(tests) == 0:
        raise ValueError("coverage of an empty test set is undefined")
    hits = sum(1 for rec, iv in zip(tests, intervals) if iv.contains(rec.y_true))
    return hits / len(tests)


def shift_records(
    records: Sequence[PredictionRecord], b: float
) -> list[PredictionRecord]:
    """Translate every prediction payload by ``b``; ground truths untouched."""
    return [rec.shifted(b) for rec in records]
