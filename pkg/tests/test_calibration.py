"""Calibration fits, interval construction, coverage, and the length laws."""

from __future__ import annotations

import math

import numpy as np
import pytest

from cpbias import (
    Interval,
    PredictionRecord,
    ScoreSpec,
    SymmetricCalibration,
    empirical_coverage,
    fit_asymmetric,
    fit_symmetric,
    predict_interval_asymmetric,
    predict_interval_symmetric,
    shift_records,
    symmetric_score,
    asymmetric_score,
)
from helpers import constant_shift_l1, make_cqr_records, make_l1_records

L1 = ScoreSpec.l1()
CQR = ScoreSpec.cqr(0.05, 0.05)


class TestFitSymmetric:
    def test_zero_residuals_give_zero_adjustment(self):
        cal = [PredictionRecord(y_true=float(v), point=float(v)) for v in range(10)]
        fitted = fit_symmetric(cal, L1, 0.2)
        assert fitted.q == 0.0 and not fitted.degenerate and fitted.n == 10

    def test_scores_one_to_nineteen(self):
        # |residual| = 1..19 at alpha 0.15: k = ceil(0.85 * 20) = 17
        cal = [PredictionRecord(y_true=0.0, point=float(s)) for s in range(1, 20)]
        fitted = fit_symmetric(cal, L1, 0.15)
        assert fitted.q == sorted(range(1, 20))[17 - 1] == 17

    def test_degenerate_when_index_exceeds_n(self):
        cal = [PredictionRecord(y_true=0.0, point=float(v)) for v in range(5)]
        fitted = fit_symmetric(cal, L1, 0.01)
        assert fitted.degenerate and math.isinf(fitted.q)

    def test_empty_and_mixed_inputs(self):
        with pytest.raises(ValueError):
            fit_symmetric([], L1, 0.1)
        mixed = [
            PredictionRecord(y_true=0.0, point=1.0),
            PredictionRecord(y_true=0.0, samples=[1.0, 2.0]),
        ]
        with pytest.raises(ValueError):
            fit_symmetric(mixed, L1, 0.1)


class TestFitAsymmetric:
    def test_exact_shift_gives_opposite_adjustments(self):
        cal = constant_shift_l1(20, 3.0)
        fitted = fit_asymmetric(cal, L1, 0.05, 0.05)
        assert (fitted.q_lo, fitted.q_hi) == (3.0, -3.0)

    def test_alternating_residuals(self):
        # s_lo alternates +-1; at alpha 0.05 with n=20, k = ceil(0.95*21) = 20
        cal = [
            PredictionRecord(y_true=0.0, point=1.0 if i % 2 else -1.0) for i in range(20)
        ]
        fitted = fit_asymmetric(cal, L1, 0.05, 0.05)
        assert (fitted.q_lo, fitted.q_hi) == (1.0, 1.0)

    def test_degenerate_on_both_sides(self):
        # n=10 at 0.075: effective alpha is 0 and k = 11 > 10
        from cpbias import effective_alpha

        assert effective_alpha(10, 0.075) == 0.0
        cal = constant_shift_l1(10, 1.0)
        fitted = fit_asymmetric(cal, L1, 0.075, 0.075)
        assert fitted.degenerate
        assert math.isinf(fitted.q_lo) and math.isinf(fitted.q_hi)


class TestPredictSymmetric:
    def test_l1_interval(self):
        calib = SymmetricCalibration(q=2.0, alpha=0.1, n=50, degenerate=False)
        iv = predict_interval_symmetric(PredictionRecord(y_true=0.0, point=5.0), calib, L1)
        assert (iv.lo, iv.hi, iv.length) == (3.0, 7.0, 4.0)

    def test_negative_adjustment_shrinks_inside_the_band(self):
        # Every record's truth sits 1 unit inside a [4, 8] band, so all
        # symmetric scores are -1 and the fitted adjustment is -1.
        samples = _band_samples(4.0, 8.0)
        cal = [PredictionRecord(y_true=5.0, samples=samples) for _ in range(30)]
        fitted = fit_symmetric(cal, CQR, 0.1)
        assert fitted.q == -1.0
        iv = predict_interval_symmetric(
            PredictionRecord(y_true=6.0, samples=samples), fitted, CQR
        )
        assert (iv.lo, iv.hi, iv.length) == (5.0, 7.0, 2.0)

    def test_zero_adjustment_returns_the_model_band(self):
        samples = _band_samples(-1.0, 1.0)
        calib = SymmetricCalibration(q=0.0, alpha=0.1, n=50, degenerate=False)
        iv = predict_interval_symmetric(
            PredictionRecord(y_true=0.0, samples=samples), calib, CQR
        )
        assert (iv.lo, iv.hi) == (-1.0, 1.0)

    def test_degenerate_calibration_gives_infinite_interval(self):
        cal = constant_shift_l1(5, 0.0)
        fitted = fit_symmetric(cal, L1, 0.01)
        iv = predict_interval_symmetric(PredictionRecord(y_true=0.0, point=1.0), fitted, L1)
        assert iv.degenerate and iv.lo == -math.inf and iv.hi == math.inf
        assert math.isinf(iv.length)


class TestPredictAsymmetric:
    def test_exact_shift_collapses_to_a_point(self):
        cal = constant_shift_l1(20, 3.0)
        fitted = fit_asymmetric(cal, L1, 0.05, 0.05)
        y = 12.34
        iv = predict_interval_asymmetric(
            PredictionRecord(y_true=y, point=y + 3.0), fitted, L1
        )
        assert iv.length == pytest.approx(0.0, abs=1e-12)
        assert iv.lo == pytest.approx(y, abs=1e-12)

    def test_plain_interval(self):
        from cpbias import AsymmetricCalibration

        calib = AsymmetricCalibration(
            q_lo=2.0, q_hi=1.0, alpha_lo=0.05, alpha_hi=0.05, n=50, degenerate=False
        )
        iv = predict_interval_asymmetric(PredictionRecord(y_true=0.0, point=5.0), calib, L1)
        assert (iv.lo, iv.hi) == (3.0, 6.0)

    def test_length_is_invariant_under_any_shift(self):
        rng = np.random.default_rng(5)
        cal = make_l1_records(rng, 60)
        test = make_l1_records(rng, 10)
        fitted = fit_asymmetric(cal, L1, 0.05, 0.05)
        base = [predict_interval_asymmetric(r, fitted, L1).length for r in test]
        for b in (-7.0, -0.5, 1.25, 4.0):
            fitted_b = fit_asymmetric(shift_records(cal, b), L1, 0.05, 0.05)
            moved = [
                predict_interval_asymmetric(r, fitted_b, L1).length
                for r in shift_records(test, b)
            ]
            for l0, lb in zip(base, moved):
                assert math.isclose(lb, l0, rel_tol=1e-9, abs_tol=1e-9)


class TestInterval:
    def test_contains_is_closed(self):
        iv = Interval(lo=1.0, hi=2.0)
        assert iv.contains(1.0) and iv.contains(2.0) and not iv.contains(2.0000001)

    def test_inverted_interval_reports_raw_and_clamped(self):
        # Truths sit deep inside a wide band, so both adjustments go negative;
        # a narrow-band test record then inverts.
        wide = _band_samples(0.0, 10.0)
        narrow = [5.0, 5.0, 5.0]
        cal = [PredictionRecord(y_true=5.0, samples=wide) for _ in range(30)]
        fitted = fit_asymmetric(cal, CQR, 0.1, 0.1)
        assert (fitted.q_lo, fitted.q_hi) == (-5.0, -5.0)
        iv = predict_interval_asymmetric(
            PredictionRecord(y_true=5.0, samples=narrow), fitted, CQR
        )
        assert iv.is_empty
        assert iv.length == -10.0
        assert iv.clamped_length == 0.0
        assert not iv.contains(5.0)


class TestEmpiricalCoverage:
    def test_degenerate_intervals_cover_everything(self):
        tests = constant_shift_l1(4, 0.0)
        ivs = [Interval(-math.inf, math.inf, degenerate=True)] * 4
        assert empirical_coverage(tests, ivs) == 1.0

    def test_point_intervals_matching_exactly(self):
        tests = constant_shift_l1(4, 0.0)
        ivs = [Interval(r.y_true, r.y_true) for r in tests]
        assert empirical_coverage(tests, ivs) == 1.0

    def test_partial_coverage_counts(self):
        tests = [PredictionRecord(y_true=float(i), point=0.0) for i in range(10)]
        ivs = [Interval(-1.0, 6.5)] * 10  # covers y = 0..6
        assert empirical_coverage(tests, ivs) == 0.7

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            empirical_coverage(constant_shift_l1(3, 0.0), [Interval(0.0, 1.0)])


class TestShiftRecords:
    def test_zero_shift_is_identity(self):
        recs = constant_shift_l1(5, 1.0)
        out = shift_records(recs, 0.0)
        assert [r.point for r in out] == [r.point for r in recs]

    def test_round_trip(self):
        recs = make_cqr_records(np.random.default_rng(1), 5, n_samples=6)
        back = shift_records(shift_records(recs, 2.0), -2.0)
        for a, b in zip(recs, back):
            assert np.allclose(a.samples, b.samples, rtol=0, atol=1e-12)
            assert a.y_true == b.y_true

    def test_truth_is_untouched(self):
        recs = constant_shift_l1(5, 1.0)
        out = shift_records(recs, 9.0)
        assert [r.y_true for r in out] == [r.y_true for r in recs]


class TestBranchSelectionUnderLargeBias:
    """With a large shift, every symmetric score comes from one fixed branch."""

    @pytest.mark.parametrize("spec_name", ["l1", "cqr"])
    def test_large_negative_bias_selects_the_upper_branch(self, spec_name):
        spec, records = _family_fixture(spec_name)
        for rec in shift_records(records, -1e4):
            pair = asymmetric_score(rec, spec)
            assert symmetric_score(rec, spec) == pair.s_hi

    @pytest.mark.parametrize("spec_name", ["l1", "cqr"])
    def test_large_positive_bias_selects_the_lower_branch(self, spec_name):
        spec, records = _family_fixture(spec_name)
        for rec in shift_records(records, 1e4):
            pair = asymmetric_score(rec, spec)
            assert symmetric_score(rec, spec) == pair.s_lo


class TestLengthLaws:
    """Seeded spot checks of the growth bound and the crossover condition."""

    def test_symmetric_length_growth_bound(self):
        rng = np.random.default_rng(17)
        for make, spec in ((make_l1_records, L1), (make_cqr_records, CQR)):
            cal = make(rng, 80)
            test = make(rng, 10)
            sym0 = fit_symmetric(cal, spec, 0.1)
            base = [predict_interval_symmetric(r, sym0, spec).length for r in test]
            for b in (-3.0, -1.0, 0.25, 2.0):
                sym_b = fit_symmetric(shift_records(cal, b), spec, 0.1)
                moved = [
                    predict_interval_symmetric(r, sym_b, spec).length
                    for r in shift_records(test, b)
                ]
                for l0, lb in zip(base, moved):
                    assert lb <= l0 + 2.0 * abs(b) + 1e-9

    def test_crossover_condition(self):
        rng = np.random.default_rng(23)
        for make, spec in ((make_l1_records, L1), (make_cqr_records, CQR)):
            cal = make(rng, 80)
            test = make(rng, 10)
            sym0 = fit_symmetric(cal, spec, 0.1)
            asym0 = fit_asymmetric(cal, spec, 0.05, 0.05)
            for b in (-3.0, -1.5, 1.5, 3.0):
                cal_b = shift_records(cal, b)
                test_b = shift_records(test, b)
                sym_b = fit_symmetric(cal_b, spec, 0.1)
                asym_b = fit_asymmetric(cal_b, spec, 0.05, 0.05)
                for rec, rec_b in zip(test, test_b):
                    gap = (
                        predict_interval_asymmetric(rec, asym0, spec).length
                        - predict_interval_symmetric(rec, sym0, spec).length
                    )
                    if 2.0 * abs(b) >= gap:
                        l_sym = predict_interval_symmetric(rec_b, sym_b, spec).length
                        l_asym = predict_interval_asymmetric(rec_b, asym_b, spec).length
                        assert l_asym <= l_sym + 1e-9

    def test_coverage_monte_carlo_small(self):
        # Desk-scale check; the full-size run lives in the acceptance suite.
        rng = np.random.default_rng(31)
        sym_cov, asym_cov = [], []
        for _ in range(40):
            cal = make_l1_records(rng, 300)
            test = make_l1_records(rng, 300)
            sym = fit_symmetric(cal, L1, 0.1)
            asym = fit_asymmetric(cal, L1, 0.05, 0.05)
            sym_cov.append(
                empirical_coverage(
                    test, [predict_interval_symmetric(r, sym, L1) for r in test]
                )
            )
            asym_cov.append(
                empirical_coverage(
                    test, [predict_interval_asymmetric(r, asym, L1) for r in test]
                )
            )
        assert 0.88 <= float(np.mean(sym_cov)) <= 0.9 + 1.0 / 301 + 0.02
        assert float(np.mean(asym_cov)) >= 0.88


def _band_samples(lo: float, hi: float) -> list[float]:
    inner = list(np.linspace(lo + 0.1, hi - 0.1, 17))
    return [lo] + inner + [hi, hi + 1.0]


def _family_fixture(name: str):
    rng = np.random.default_rng(41)
    if name == "l1":
        return L1, make_l1_records(rng, 25)
    return CQR, make_cqr_records(rng, 25)
