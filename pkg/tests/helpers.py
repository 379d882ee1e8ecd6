"""Shared fixture builders for the test suite."""

from __future__ import annotations

import numpy as np

from cpbias import PredictionRecord


def make_l1_records(
    rng: np.random.Generator, n: int, noise_sigma: float = 2.0, bias: float = 0.0
) -> list[PredictionRecord]:
    y = 10.0 + 5.0 * rng.standard_normal(n)
    pred = y + bias + noise_sigma * rng.standard_normal(n)
    return [PredictionRecord(y_true=float(a), point=float(p)) for a, p in zip(y, pred)]


def make_cqr_records(
    rng: np.random.Generator,
    n: int,
    n_samples: int = 30,
    noise_sigma: float = 2.0,
    bias: float = 0.0,
) -> list[PredictionRecord]:
    y = 10.0 + 5.0 * rng.standard_normal(n)
    return [
        PredictionRecord(
            y_true=float(yi),
            samples=yi + bias + noise_sigma * rng.standard_normal(n_samples),
        )
        for yi in y
    ]


def constant_shift_l1(n: int, shift: float) -> list[PredictionRecord]:
    """Records whose point prediction is exactly y_true + shift.

    Truths sit on a dyadic grid so the residual arithmetic is exact in
    floating point (closed-form fixtures rely on that).
    """
    ys = -5.0 + 0.5 * np.arange(n)
    return [PredictionRecord(y_true=float(y), point=float(y + shift)) for y in ys]
