"""Order-statistic quantile primitive: worked examples and invariants."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cpbias.quantile import (
    MiscoverageSpec,
    TiedScoresWarning,
    conformal_quantile,
    effective_alpha,
    plain_quantile,
)

finite_floats = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)
score_lists = st.lists(finite_floats, min_size=1, max_size=80)
levels = st.floats(min_value=0.01, max_value=0.99)


class TestConformalQuantile:
    def test_midpoint_example(self):
        # k = ceil(0.5 * 5) = 3 -> third smallest
        assert conformal_quantile([1.0, 2.0, 3.0, 4.0], 0.5) == (3.0, False)

    def test_small_sample_takes_the_maximum(self):
        # 19 scores at alpha 0.075: k = ceil(0.925 * 20) = 19 = n
        scores = [float(v) for v in range(1, 20)]
        assert conformal_quantile(scores, 0.075) == (19.0, False)

    def test_index_past_sample_is_degenerate(self):
        # n = 5, alpha = 0.01: k = ceil(0.99 * 6) = 6 > 5
        value, degenerate = conformal_quantile([1.0, 2.0, 3.0, 4.0, 5.0], 0.01)
        assert degenerate and math.isinf(value) and value > 0

    def test_matches_sort_and_index_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            n = int(rng.integers(1, 50))
            scores = rng.standard_normal(n) * 10.0
            alpha = float(rng.uniform(0.02, 0.9))
            k = math.ceil((1.0 - alpha) * (n + 1) - 1e-9)
            expected = math.inf if k > n else sorted(scores)[k - 1]
            got = conformal_quantile(scores, alpha)
            assert got.value == expected
            assert got.degenerate == (k > n)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            conformal_quantile([], 0.1)
        with pytest.raises(ValueError):
            conformal_quantile([1.0, math.nan], 0.1)
        with pytest.raises(ValueError):
            conformal_quantile([1.0, math.inf], 0.1)
        for alpha in (0.0, 1.0, -0.5, 1.5):
            with pytest.raises(ValueError):
                conformal_quantile([1.0, 2.0], alpha)

    def test_warns_on_heavily_tied_scores(self):
        with pytest.warns(TiedScoresWarning):
            conformal_quantile([1.0] * 50, 0.2)

    def test_no_warning_for_distinct_scores(self):
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("error", TiedScoresWarning)
            conformal_quantile(np.arange(50.0), 0.2)


@given(scores=score_lists, alpha=levels, b=finite_floats)
@settings(max_examples=100, deadline=None)
def test_translation_equivariance(scores, alpha, b):
    base = conformal_quantile(scores, alpha)
    moved = conformal_quantile(np.asarray(scores) + b, alpha)
    assert moved.degenerate == base.degenerate
    if not base.degenerate:
        # The k-th order statistic of the shifted list is the shifted element itself.
        shifted = sorted(float(s + b) for s in np.asarray(scores))
        assert moved.value in shifted
        assert math.isclose(moved.value, base.value + b, rel_tol=1e-9, abs_tol=1e-9)


@given(scores=score_lists, a1=levels, a2=levels)
@settings(max_examples=100, deadline=None)
def test_monotonicity_in_alpha(scores, a1, a2):
    lo_alpha, hi_alpha = min(a1, a2), max(a1, a2)
    q_tight = conformal_quantile(scores, lo_alpha)
    q_loose = conformal_quantile(scores, hi_alpha)
    tight = math.inf if q_tight.degenerate else q_tight.value
    loose = math.inf if q_loose.degenerate else q_loose.value
    assert tight >= loose


@given(scores=score_lists, alpha=levels, seed=st.integers(0, 2**16))
@settings(max_examples=100, deadline=None)
def test_permutation_invariance_and_membership(scores, alpha, seed):
    shuffled = list(scores)
    np.random.default_rng(seed).shuffle(shuffled)
    assert conformal_quantile(shuffled, alpha) == conformal_quantile(scores, alpha)
    q = conformal_quantile(scores, alpha)
    if not q.degenerate:
        assert q.value in [float(s) for s in scores]


class TestPlainQuantile:
    def test_index_rule(self):
        samples = [float(v) for v in range(1, 101)]
        assert plain_quantile(samples, 0.05) == 5.0
        assert plain_quantile(samples, 0.95) == 95.0
        assert plain_quantile(samples, 1e-6) == 1.0  # clamps at the minimum

    def test_translation(self):
        samples = np.array([3.0, 1.0, 7.0, 2.0])
        assert plain_quantile(samples + 4.5, 0.5) == plain_quantile(samples, 0.5) + 4.5


class TestEffectiveAlpha:
    @pytest.mark.parametrize(
        "n,alpha,expected",
        [
            (10, 0.075, 0.0),  # floor(0.825) / 11
            (999, 0.1, 0.1),  # exact divisibility
            (4, 0.5, 0.4),  # floor(2.5) / 5
        ],
    )
    def test_examples(self, n, alpha, expected):
        assert effective_alpha(n, alpha) == pytest.approx(expected, abs=1e-12)

    def test_properties(self):
        rng = np.random.default_rng(3)
        for _ in range(300):
            n = int(rng.integers(1, 2000))
            alpha = float(rng.uniform(0.01, 0.99))
            a_hat = effective_alpha(n, alpha)
            assert 0.0 <= a_hat <= alpha + 1e-12
            assert alpha - a_hat < 1.0 / (n + 1) + 1e-12
            scaled = a_hat * (n + 1)
            assert math.isclose(scaled, round(scaled), abs_tol=1e-6)

    def test_rejects_bad_n(self):
        with pytest.raises(ValueError):
            effective_alpha(0, 0.1)


class TestMiscoverageSpec:
    def test_symmetric_ok(self):
        assert MiscoverageSpec.symmetric(0.1).alpha == 0.1

    def test_asymmetric_ok(self):
        spec = MiscoverageSpec.asymmetric(0.05, 0.075)
        assert (spec.alpha_lo, spec.alpha_hi) == (0.05, 0.075)

    def test_rejects_invalid(self):
        with pytest.raises(ValueError):
            MiscoverageSpec.symmetric(1.2)
        with pytest.raises(ValueError):
            MiscoverageSpec.asymmetric(0.6, 0.5)
        with pytest.raises(ValueError):
            MiscoverageSpec(mode="other", alpha=0.1)
        with pytest.raises(ValueError):
            MiscoverageSpec(mode="symmetric")
