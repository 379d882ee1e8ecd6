"""Non-conformity scores for point (L1) and sample-based (CQR) predictions.

Both families share one canonical form built from a lower and an upper
adjustment point per prediction: the symmetric score is
``max(f_lo - y, y - f_hi)`` and the asymmetric pair is
``(f_lo - y, y - f_hi)``.  For a point prediction both adjustment points
collapse to the point itself; for a prediction sample they are inner
empirical quantiles of the sample.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .quantile import plain_quantile

__all__ = [
    "PredictionRecord",
    "ScoreFamily",
    "ScorePair",
    "ScoreSpec",
    "adjustment_arrays",
    "adjustment_points",
    "asymmetric_score",
    "symmetric_score",
]


class ScoreFamily(str, enum.Enum):
    L1 = "l1"
    CQR = "cqr"


@dataclass(frozen=True)
class ScoreSpec:
    """Which score family is in force, plus the inner band levels for CQR.

    ``inner_lo`` and ``inner_hi`` are the tail probabilities of the model's
    inner quantile band ``[Q(inner_lo), Q(1 - inner_hi)]``; the L1 family
    ignores them.
    """

    family: ScoreFamily
    inner_lo: float | None = None
    inner_hi: float | None = None

    def __post_init__(self) -> None:
        family = ScoreFamily(self.family)
        object.__setattr__(self, "family", family)
        if family is ScoreFamily.CQR:
            for name, level in (("inner_lo", self.inner_lo), ("inner_hi", self.inner_hi)):
                if level is None or not (math.isfinite(level) and 0.0 < level < 1.0):
                    raise ValueError(f"CQR requires {name} strictly inside (0, 1), got {level!r}")
            if self.inner_lo + self.inner_hi >= 1.0:
                raise ValueError("CQR requires inner_lo + inner_hi < 1")

    @classmethod
    def l1(cls) -> "ScoreSpec":
        return cls(family=ScoreFamily.L1)

    @classmethod
    def cqr(cls, inner_lo: float, inner_hi: float) -> "ScoreSpec":
        return cls(family=ScoreFamily.CQR, inner_lo=inner_lo, inner_hi=inner_hi)


@dataclass(frozen=True, eq=False)
class PredictionRecord:
    """One calibration/test unit: a ground truth plus a prediction payload.

    Exactly one of ``point`` (a scalar prediction) or ``samples`` (a finite
    prediction sample of size >= 2) must be given.  Any NaN or infinity is a
    hard input error; samples are stored as a read-only float array.
    """

    y_true: float
    point: float | None = None
    samples: np.ndarray | None = None

    def __post_init__(self) -> None:
        if not (isinstance(self.y_true, (int, float)) and math.isfinite(self.y_true)):
            raise ValueError(f"y_true must be finite, got {self.y_true!r}")
        object.__setattr__(self, "y_true", float(self.y_true))
        if (self.point is None) == (self.samples is None):
            raise ValueError("exactly one of point or samples must be provided")
        if self.point is not None:
            if not math.isfinite(self.point):
                raise ValueError(f"point prediction must be finite, got {self.point!r}")
            object.__setattr__(self, "point", float(self.point))
        else:
            arr = np.asarray(self.samples, dtype=float)
            if arr.ndim != 1 or arr.size < 2:
                raise ValueError("samples must hold at least 2 values; a single sample is a point prediction")
            if not np.isfinite(arr).all():
                raise ValueError("samples must be finite (no NaN or infinities)")
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, "samples", arr)

    @property
    def is_point(self) -> bool:
        return self.point is not None

    def shifted(self, b: float) -> "PredictionRecord":
        """Copy with the prediction payload translated by ``b``; y_true untouched."""
        if not math.isfinite(b):
            raise ValueError(f"shift must be finite, got {b!r}")
        if self.is_point:
            return PredictionRecord(y_true=self.y_true, point=self.point + b)
        return PredictionRecord(y_true=self.y_true, samples=self.samples + b)


class ScorePair(NamedTuple):
    s_lo: float
    s_hi: float


def _require_match(rec: PredictionRecord, spec: ScoreSpec) -> None:
    if spec.family is ScoreFamily.L1 and not rec.is_point:
        raise ValueError("L1 scoring needs a point prediction, got a sample set")
    if spec.family is ScoreFamily.CQR and rec.is_point:
        raise ValueError("CQR scoring needs a prediction sample, got a point")


def adjustment_points(rec: PredictionRecord, spec: ScoreSpec) -> tuple[float, float]:
    """Lower and upper adjustment points (f_lo, f_hi) for one record.

    L1 returns the point twice; CQR returns the inner_lo and (1 - inner_hi)
    empirical quantiles of the sample under the plain order-statistic rule.
    """
    _require_match(rec, spec)
    if spec.family is ScoreFamily.L1:
        return rec.point, rec.point
    f_lo = plain_quantile(rec.samples, spec.inner_lo)
    f_hi = plain_quantile(rec.samples, 1.0 - spec.inner_hi)
    return f_lo, f_hi


def symmetric_score(rec: PredictionRecord, spec: ScoreSpec) -> float:
    """max(f_lo - y_true, y_true - f_hi); equals |y_true - point| for L1."""
    f_lo, f_hi = adjustment_points(rec, spec)
    return max(f_lo - rec.y_true, rec.y_true - f_hi)


def asymmetric_score(rec: PredictionRecord, spec: ScoreSpec) -> ScorePair:
    """Signed pair (f_lo - y_true, y_true - f_hi); its max is the symmetric score."""
    f_lo, f_hi = adjustment_points(rec, spec)
    return ScorePair(f_lo - rec.y_true, rec.y_true - f_hi)


def adjustment_arrays(
    records: Iterable[PredictionRecord], spec: ScoreSpec
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(y_true, f_lo, f_hi) for a homogeneous record batch, as aligned arrays."""
    y: list[float] = []
    lo: list[float] = []
    hi: list[float] = []
    for i, rec in enumerate(records):
        try:
            f_lo, f_hi = adjustment_points(rec, spec)
        except ValueError as exc:
            raise ValueError(f"record {i}: {exc}") from None
        y.append(rec.y_true)
        lo.append(f_lo)
        hi.append(f_hi)
    return np.asarray(y), np.asarray(lo), np.asarray(hi)
