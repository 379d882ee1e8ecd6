"""Seeded synthetic data: skewed regression fixtures and a drifting series.

All generation is reproducible and order-independent: each data point gets
its own PCG64 stream derived from ``(seed, role, index)`` via numpy's
SeedSequence, so calibration and test sets can be produced in parallel and
still match a sequential run bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .scores import PredictionRecord
from .timeseries import SeriesPoint

__all__ = [
    "NoiseSpec",
    "SyntheticConfig",
    "generate",
    "skew_suite",
    "weather_series",
]

_CAL_STREAM = 0
_TEST_STREAM = 1


@dataclass(frozen=True)
class NoiseSpec:
    """One of three noise shapes: gaussian, shifted-scaled Weibull, or its negation.

    Weibull draws use the inverse CDF ``loc + scale * (-ln U)**(1/shape)``,
    supported on ``[loc, inf)``.  For the negated variant the default is to
    negate the full shifted draw, ``-(loc + scale * E)``; setting
    ``negate_after_shift=False`` applies the location after negation instead
    (``loc - scale * E``), which moves the mean by ``2 * |loc|``.
    """

    kind: str  # "gaussian" | "weibull" | "negated_weibull"
    mu: float = 0.0
    sigma: float = 1.0
    shape: float = 1.0
    loc: float = 0.0
    scale: float = 1.0
    negate_after_shift: bool = True

    def __post_init__(self) -> None:
        if self.kind == "gaussian":
            if not (math.isfinite(self.sigma) and self.sigma > 0):
                raise ValueError(f"sigma must be positive, got {self.sigma!r}")
        elif self.kind in ("weibull", "negated_weibull"):
            if not (math.isfinite(self.shape) and self.shape > 0):
                raise ValueError(f"shape must be positive, got {self.shape!r}")
            if not (math.isfinite(self.scale) and self.scale > 0):
                raise ValueError(f"scale must be positive, got {self.scale!r}")
            if not math.isfinite(self.loc):
                raise ValueError(f"loc must be finite, got {self.loc!r}")
        else:
            raise ValueError(f"unknown noise kind {self.kind!r}")

    @classmethod
    def gaussian(cls, mu: float, sigma: float) -> "NoiseSpec":
        return cls(kind="gaussian", mu=mu, sigma=sigma)

    @classmethod
    def weibull(cls, shape: float, loc: float, scale: float) -> "NoiseSpec":
        return cls(kind="weibull", shape=shape, loc=loc, scale=scale)

    @classmethod
    def negated_weibull(
        cls, shape: float, loc: float, scale: float, negate_after_shift: bool = True
    ) -> "NoiseSpec":
        return cls(
            kind="negated_weibull",
            shape=shape,
            loc=loc,
            scale=scale,
            negate_after_shift=negate_after_shift,
        )

    def mean(self) -> float:
        """Closed-form mean of one draw."""
        if self.kind == "gaussian":
            return self.mu
        base = self.scale * math.gamma(1.0 + 1.0 / self.shape)
        if self.kind == "weibull":
            return self.loc + base
        if self.negate_after_shift:
            return -(self.loc + base)
        return self.loc - base

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "gaussian":
            return self.mu + self.sigma * rng.standard_normal(size)
        # 1 - U lies in (0, 1], so the log never overflows.
        u = 1.0 - rng.random(size)
        e = np.power(-np.log(u), 1.0 / self.shape)
        if self.kind == "weibull":
            return self.loc + self.scale * e
        if self.negate_after_shift:
            return -(self.loc + self.scale * e)
        return self.loc - self.scale * e


@dataclass(frozen=True)
class SyntheticConfig:
    """Sizes, distributions, and seed for one synthetic regression fixture.

    Each data point draws its truth from N(truth_mu, truth_sigma) and then
    ``n_samples`` independent noisy predictions ``truth + noise``.  With
    ``n_samples=1`` the fixture holds point (L1) records; with more it holds
    sample (CQR) records.
    """

    n_cal: int
    n_test: int
    n_samples: int
    truth_mu: float
    truth_sigma: float
    noise: NoiseSpec
    seed: int

    def __post_init__(self) -> None:
        for name in ("n_cal", "n_test", "n_samples"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if not (math.isfinite(self.truth_sigma) and self.truth_sigma > 0):
            raise ValueError(f"truth_sigma must be positive, got {self.truth_sigma!r}")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")


def _make_record(config: SyntheticConfig, stream: int, index: int) -> PredictionRecord:
    rng = np.random.default_rng([config.seed, stream, index])
    y = config.truth_mu + config.truth_sigma * rng.standard_normal()
    preds = y + config.noise.draw(rng, config.n_samples)
    if config.n_samples == 1:
        return PredictionRecord(y_true=float(y), point=float(preds[0]))
    return PredictionRecord(y_true=float(y), samples=preds)


def generate(
    config: SyntheticConfig,
) -> tuple[list[PredictionRecord], list[PredictionRecord]]:
    """Draw the (calibration, test) record lists for a fixture, deterministically."""
    cal = [_make_record(config, _CAL_STREAM, i) for i in range(config.n_cal)]
    test = [_make_record(config, _TEST_STREAM, i) for i in range(config.n_test)]
    return cal, test


def skew_suite(seed: int = 0, n_samples: int = 1000) -> dict[str, SyntheticConfig]:
    """The three standard noise settings over an N(10, 5) truth.

    Right skew is a scale-5 exponential (Weibull shape 1), no skew is
    N(0, 2), left skew is a negated shifted Weibull.  1000 calibration and
    test points each.
    """
    base = SyntheticConfig(
        n_cal=1000,
        n_test=1000,
        n_samples=n_samples,
        truth_mu=10.0,
        truth_sigma=5.0,
        noise=NoiseSpec.gaussian(0.0, 2.0),
        seed=seed,
    )
    return {
        "right_skew": replace(base, noise=NoiseSpec.weibull(1.0, 0.0, 5.0), seed=seed),
        "no_skew": replace(base, seed=seed + 1),
        "left_skew": replace(base, noise=NoiseSpec.negated_weibull(1.0, -2.0, 5.0), seed=seed + 2),
    }


def weather_series(
    n_steps: int,
    seed: int,
    *,
    mean: float = 10.0,
    seasonal_amplitude: float = 5.0,
    season_length: int = 2000,
    ar_coeff: float = 0.99,
    ar_sigma: float = 0.3,
    pred_sigma: float = 1.0,
) -> list[SeriesPoint]:
    """Seeded weather-like series: seasonality plus an AR(1) component.

    Predictions are the truth plus independent N(0, pred_sigma) noise, i.e.
    unbiased until a drift is injected on top.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    if not 0.0 <= ar_coeff < 1.0:
        raise ValueError(f"ar_coeff must lie in [0, 1), got {ar_coeff!r}")
    rng = np.random.default_rng([seed, 2])
    t = np.arange(n_steps)
    seasonal = mean + seasonal_amplitude * np.sin(2.0 * math.pi * t / season_length)
    shocks = ar_sigma * rng.standard_normal(n_steps)
    ar = np.empty(n_steps)
    # Start at the stationary distribution so early steps are not special.
    ar[0] = shocks[0] / math.sqrt(1.0 - ar_coeff**2)
    for i in range(1, n_steps):
        ar[i] = ar_coeff * ar[i - 1] + shocks[i]
    truth = seasonal + ar
    preds = truth + pred_sigma * rng.standard_normal(n_steps)
    return [
        SeriesPoint(t=int(i), y_true=float(truth[i]), y_pred=float(preds[i]))
        for i in range(n_steps)
    ]
