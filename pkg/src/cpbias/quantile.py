"""Finite-sample empirical quantiles of score sets.

Every calibration step in this package reduces to one primitive: the
k-th smallest element of a score sample, with k chosen so that the
resulting adjustment carries a finite-sample coverage guarantee
(``conformal_quantile``).  Model-side quantiles of a prediction sample
use the plain (uninflated) variant of the same order-statistic rule
(``plain_quantile``) so that translation identities between the two are
exact.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

__all__ = [
    "MiscoverageSpec",
    "QuantileValue",
    "TiedScoresWarning",
    "conformal_quantile",
    "effective_alpha",
    "plain_quantile",
]

# Order-statistic indices are derived from float products like
# (1 - alpha) * (n + 1).  A nudge smaller than any meaningful level
# difference keeps ceil/floor from tipping over an integer boundary due
# to binary representation error (e.g. 0.05 * 100 -> 5.000000000000001).
_INDEX_EPS = 1e-9


class TiedScoresWarning(UserWarning):
    """Calibration scores contain enough ties to matter for the coverage upper bound."""


class QuantileValue(NamedTuple):
    """A conformal adjustment plus whether it fell off the end of the sample."""

    value: float
    degenerate: bool


def _as_finite_array(values: Sequence[float] | np.ndarray, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{what} must be a non-empty one-dimensional sequence")
    if not np.isfinite(arr).all():
        raise ValueError(f"{what} must be finite (no NaN or infinities)")
    return arr


def _check_level(alpha: float, name: str = "alpha") -> None:
    if not (isinstance(alpha, (int, float)) and math.isfinite(alpha) and 0.0 < alpha < 1.0):
        raise ValueError(f"{name} must lie strictly inside (0, 1), got {alpha!r}")


def conformal_quantile(scores: Sequence[float] | np.ndarray, alpha: float) -> QuantileValue:
    """Finite-sample-adjusted (1 - alpha) empirical quantile of a score set.

    Returns the k-th smallest score with ``k = ceil((1 - alpha) * (n + 1))``.
    When k exceeds n the adjustment does not exist within the sample; the
    sentinel ``+inf`` is returned with ``degenerate=True`` so downstream
    intervals degenerate visibly instead of erroring.

    Parameters
    ----------
    scores : sequence of float
        Calibration scores; must be non-empty and finite.
    alpha : float
        Target miscoverage rate in (0, 1).
    """
    arr = _as_finite_array(scores, "scores")
    _check_level(alpha)
    n = arr.size

    n_unique = np.unique(arr).size
    if (n - n_unique) > 0.01 * n:
        warnings.warn(
            f"{n - n_unique} of {n} calibration scores are tied; the coverage "
            "upper bound assumes almost-surely distinct scores",
            TiedScoresWarning,
            stacklevel=2,
        )

    k = math.ceil((1.0 - alpha) * (n + 1) - _INDEX_EPS)
    k = max(k, 1)
    if k > n:
        return QuantileValue(math.inf, True)
    return QuantileValue(float(np.partition(arr, k - 1)[k - 1]), False)


def plain_quantile(values: Sequence[float] | np.ndarray, level: float) -> float:
    """Level-p empirical quantile: the k-th smallest with ``k = ceil(p * m)``.

    The index is clamped to ``[1, m]``.  This is the uninflated rule used
    for model-side quantiles of a prediction sample; it shares the
    order-statistic convention of :func:`conformal_quantile` so both
    translate exactly under constant shifts.
    """
    arr = _as_finite_array(values, "values")
    _check_level(level, "level")
    m = arr.size
    k = math.ceil(level * m - _INDEX_EPS)
    k = min(max(k, 1), m)
    return float(np.partition(arr, k - 1)[k - 1])


def effective_alpha(n: int, alpha: float) -> float:
    """Finite-sample adjusted miscoverage rate ``floor(alpha * (n + 1)) / (n + 1)``."""
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    _check_level(alpha)
    return math.floor(alpha * (n + 1) + _INDEX_EPS) / (n + 1)


@dataclass(frozen=True)
class MiscoverageSpec:
    """Validated miscoverage budget, either one symmetric rate or a lower/upper pair."""

    mode: str  # "symmetric" | "asymmetric"
    alpha: float | None = None
    alpha_lo: float | None = None
    alpha_hi: float | None = None

    def __post_init__(self) -> None:
        if self.mode == "symmetric":
            if self.alpha is None:
                raise ValueError("symmetric mode requires alpha")
            _check_level(self.alpha)
        elif self.mode == "asymmetric":
            if self.alpha_lo is None or self.alpha_hi is None:
                raise ValueError("asymmetric mode requires alpha_lo and alpha_hi")
            _check_level(self.alpha_lo, "alpha_lo")
            _check_level(self.alpha_hi, "alpha_hi")
            if self.alpha_lo + self.alpha_hi >= 1.0:
                raise ValueError("alpha_lo + alpha_hi must be strictly below 1")
        else:
            raise ValueError(f"unknown miscoverage mode {self.mode!r}")

    @classmethod
    def symmetric(cls, alpha: float) -> "MiscoverageSpec":
        return cls(mode="symmetric", alpha=alpha)

    @classmethod
    def asymmetric(cls, alpha_lo: float, alpha_hi: float) -> "MiscoverageSpec":
        return cls(mode="asymmetric", alpha_lo=alpha_lo, alpha_hi=alpha_hi)
