"""Command-line harness: data ingestion, experiment sweeps, and reports.

Subcommands
-----------
sweep          bias sweep over a grid: per-bias max lengths, the growth
               bound, the crossover flag, and coverages, as JSON + CSV
table          leave-one-out length comparison per metric file
timeseries     windowed run of all three modes over a series, with a
               coverage/length summary
estimate-bias  fit the effective bias of a calibration file
verify         seeded invariant checks; exit code 1 on any failure
synth          emit generated calibration/test or series data

Exit codes: 0 success, 1 property failure, 2 usage or input error.
Reports embed the tool version and full config echo and are byte-stable
under a fixed seed.

CSV formats: point predictions as ``y_true,y_pred``, sample predictions as
``y_true,s1,...,sN`` (an optional ``group_id`` column tags leave-one-out
groups), series as ``t,y_true,y_pred``.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .bias import OptimizerConfig, SymmetricLengthObjective, estimate_bias, grid_oracle, mean_bias
from .calibration import (
    empirical_coverage,
    fit_asymmetric,
    fit_symmetric,
    predict_interval_asymmetric,
    predict_interval_symmetric,
    shift_records,
)
from .quantile import conformal_quantile, effective_alpha
from .scores import (
    PredictionRecord,
    ScoreFamily,
    ScoreSpec,
    asymmetric_score,
    symmetric_score,
)
from .synthgen import NoiseSpec, SyntheticConfig, generate, skew_suite, weather_series
from .timeseries import (
    MODES,
    WindowConfig,
    inject_drift,
    length_vs_bias_profile,
    read_series_csv,
    run_windowed,
    write_step_results_csv,
)

SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# ingestion
# ---------------------------------------------------------------------------

def read_points_csv(path: str | Path) -> tuple[list[PredictionRecord], list[str] | None]:
    """Load prediction records from a point or wide-sample CSV.

    Returns the records plus the group labels when a ``group_id`` column is
    present (None otherwise).
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        if "y_true" not in fields:
            raise ValueError(f"{path}: missing required column y_true")
        sample_cols = sorted(
            (f for f in fields if f.startswith("s") and f[1:].isdigit()),
            key=lambda f: int(f[1:]),
        )
        has_point = "y_pred" in fields
        if has_point == bool(sample_cols):
            raise ValueError(
                f"{path}: need either a y_pred column or s1..sN sample columns, not both/neither"
            )
        has_groups = "group_id" in fields
        records: list[PredictionRecord] = []
        groups: list[str] = []
        for row in reader:
            try:
                y = float(row["y_true"])
                if has_point:
                    rec = PredictionRecord(y_true=y, point=float(row["y_pred"]))
                else:
                    rec = PredictionRecord(
                        y_true=y, samples=[float(row[c]) for c in sample_cols]
                    )
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path}: bad row {row!r}: {exc}") from None
            records.append(rec)
            if has_groups:
                groups.append(row["group_id"])
    if not records:
        raise ValueError(f"{path}: no data rows")
    return records, (groups if has_groups else None)


def write_points_csv(path: str | Path, records: Sequence[PredictionRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if records[0].is_point:
            writer.writerow(["y_true", "y_pred"])
            for rec in records:
                writer.writerow([repr(rec.y_true), repr(rec.point)])
        else:
            n_s = records[0].samples.size
            writer.writerow(["y_true"] + [f"s{j + 1}" for j in range(n_s)])
            for rec in records:
                writer.writerow([repr(rec.y_true)] + [repr(float(v)) for v in rec.samples])


# ---------------------------------------------------------------------------
# report plumbing
# ---------------------------------------------------------------------------

def _jsonable(value):
    """Recursively make a report JSON-safe (non-finite floats become strings)."""
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, np.integer)):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    return value


def write_json_report(path: str | Path, payload: dict) -> None:
    text = json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n"
    Path(path).write_text(text, encoding="utf-8")


def _report_header(command: str, config: dict) -> dict:
    return {"schema": SCHEMA_VERSION, "version": __version__, "command": command, "config": config}


def _base_path(output: str, suffix_to_strip: tuple[str, ...] = (".json", ".csv")) -> Path:
    base = Path(output)
    if base.suffix in suffix_to_strip:
        base = base.with_suffix("")
    if base.parent and not base.parent.exists():
        base.parent.mkdir(parents=True, exist_ok=True)
    return base


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def _mode_stats(records, intervals):
    lengths = [iv.length for iv in intervals]
    return {
        "max_length": max(lengths),
        "coverage": empirical_coverage(records, intervals),
        "degenerate": any(iv.degenerate for iv in intervals),
    }


def _sweep_cell(cal, test, spec, alpha, alpha_lo, alpha_hi):
    sym = fit_symmetric(cal, spec, alpha)
    asym = fit_asymmetric(cal, spec, alpha_lo, alpha_hi)
    sym_iv = [predict_interval_symmetric(r, sym, spec) for r in test]
    asym_iv = [predict_interval_asymmetric(r, asym, spec) for r in test]
    return _mode_stats(test, sym_iv), _mode_stats(test, asym_iv)


def run_sweep(
    cal: Sequence[PredictionRecord],
    test: Sequence[PredictionRecord],
    spec: ScoreSpec,
    alpha: float,
    alpha_lo: float,
    alpha_hi: float,
    grid: Sequence[float],
    optimizer: OptimizerConfig = OptimizerConfig(),
) -> dict:
    """Debias, then profile both adjustment modes over a grid of injected biases.

    Each row reports the maximum test-set interval length and coverage for
    both modes, the symmetric growth bound anchored at the b=0 cell, and
    whether the crossover condition ``2|b| >= L_asym(0) - L_sym(0)`` holds.
    """
    estimate = estimate_bias(cal, spec, alpha, optimizer)
    cal0 = shift_records(cal, -estimate.b_eff)
    test0 = shift_records(test, -estimate.b_eff)

    sym0, asym0 = _sweep_cell(cal0, test0, spec, alpha, alpha_lo, alpha_hi)
    crossover_gap = asym0["max_length"] - sym0["max_length"]

    rows = []
    for b in sorted(grid):
        if b == 0.0:
            sym_b, asym_b = sym0, asym0
        else:
            cal_b = shift_records(cal0, b)
            test_b = shift_records(test0, b)
            sym_b, asym_b = _sweep_cell(cal_b, test_b, spec, alpha, alpha_lo, alpha_hi)
        rows.append(
            {
                "b": b,
                "L_sym_max": sym_b["max_length"],
                "L_asym_max": asym_b["max_length"],
                "bound": sym0["max_length"] + 2.0 * abs(b),
                "crossover": bool(2.0 * abs(b) >= crossover_gap),
                "coverage_sym": sym_b["coverage"],
                "coverage_asym": asym_b["coverage"],
                "degenerate": sym_b["degenerate"] or asym_b["degenerate"],
            }
        )
    return {
        "b_eff": estimate.b_eff,
        "bias_fit": {
            "iterations": estimate.iterations,
            "converged": estimate.converged,
            "final_objective": estimate.final_objective,
        },
        "reference": {"L_sym_max": sym0["max_length"], "L_asym_max": asym0["max_length"]},
        "rows": rows,
    }


SWEEP_CSV_COLUMNS = (
    "b",
    "L_sym_max",
    "L_asym_max",
    "bound",
    "crossover",
    "coverage_sym",
    "coverage_asym",
    "degenerate",
)


def _write_sweep_csv(path: Path, rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_CSV_COLUMNS)
        for row in rows:
            writer.writerow(
                [
                    repr(row[c]) if isinstance(row[c], float) else int(row[c]) if isinstance(row[c], bool) else row[c]
                    for c in SWEEP_CSV_COLUMNS
                ]
            )


# ---------------------------------------------------------------------------
# table (leave-one-out per metric)
# ---------------------------------------------------------------------------

def run_table(
    metrics: dict[str, tuple[Sequence[PredictionRecord], Sequence[str]]],
    spec: ScoreSpec,
    alpha: float,
    alpha_lo: float,
    alpha_hi: float,
    optimizer: OptimizerConfig = OptimizerConfig(),
) -> dict:
    """Leave-one-group-out length comparison for each metric.

    Per fold: calibrate both modes on the remaining groups, fit the
    effective bias there, and measure the held-out records' interval
    lengths.  The crossover flag tests ``2|b_eff| >= L_asym(0) - L_sym(0)``
    per fold with debiased symmetric lengths, then takes the fold majority.
    """
    out_rows = []
    for name, (records, groups) in metrics.items():
        if len(records) != len(groups):
            raise ValueError(f"{name}: records and group labels must align")
        order: list[str] = []
        for g in groups:
            if g not in order:
                order.append(g)
        if len(order) < 3:
            raise ValueError(f"{name}: leave-one-out needs at least 3 groups, got {len(order)}")

        fold_b_eff = []
        fold_flags = []
        diffs: list[float] = []
        asym_not_longer = 0
        held_total = 0
        degenerate = False
        for g in order:
            held = [r for r, lab in zip(records, groups) if lab == g]
            rest = [r for r, lab in zip(records, groups) if lab != g]
            sym = fit_symmetric(rest, spec, alpha)
            asym = fit_asymmetric(rest, spec, alpha_lo, alpha_hi)
            est = estimate_bias(rest, spec, alpha, optimizer)
            sym0 = fit_symmetric(shift_records(rest, -est.b_eff), spec, alpha)
            degenerate = degenerate or sym.degenerate or asym.degenerate or sym0.degenerate

            sym_len0 = []
            for rec in held:
                l_sym = predict_interval_symmetric(rec, sym, spec).length
                l_asym = predict_interval_asymmetric(rec, asym, spec).length
                diffs.append(l_asym - l_sym)
                asym_not_longer += l_asym <= l_sym
                sym_len0.append(predict_interval_symmetric(rec, sym0, spec).length)
                held_total += 1
            # Asymmetric lengths are shift-invariant, so the fitted ones stand
            # in for the debiased ones in the crossover condition.
            asym_len0 = [
                predict_interval_asymmetric(rec, asym, spec).length for rec in held
            ]
            gap = float(np.mean(asym_len0)) - float(np.mean(sym_len0))
            fold_flags.append(2.0 * abs(est.b_eff) >= gap)
            fold_b_eff.append(est.b_eff)

        out_rows.append(
            {
                "metric": name,
                "b_eff": float(np.mean(fold_b_eff)),
                "mean_length_diff": float(np.mean(diffs)),
                "p_asym_le_sym": asym_not_longer / held_total,
                "crossover": bool(sum(fold_flags) * 2 >= len(fold_flags)),
                "n_groups": len(order),
                "degenerate": degenerate,
            }
        )
    return {"rows": out_rows}


TABLE_CSV_COLUMNS = (
    "metric",
    "b_eff",
    "mean_length_diff",
    "p_asym_le_sym",
    "crossover",
    "n_groups",
    "degenerate",
)


def _write_table_csv(path: Path, rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TABLE_CSV_COLUMNS)
        for row in rows:
            writer.writerow(
                [
                    repr(row[c]) if isinstance(row[c], float) else int(row[c]) if isinstance(row[c], bool) else row[c]
                    for c in TABLE_CSV_COLUMNS
                ]
            )


# ---------------------------------------------------------------------------
# timeseries suite
# ---------------------------------------------------------------------------

def _fit_slope(pairs: list[tuple[float, float]]) -> float | None:
    """Slope of length against |bias| over the higher-|bias| half of a profile."""
    x = np.array([abs(b) for b, _ in pairs])
    y = np.array([ln for _, ln in pairs])
    keep = np.isfinite(y)
    x, y = x[keep], y[keep]
    if x.size < 2 or x.max() <= 0:
        return None
    half = x >= x.max() / 2.0
    if half.sum() < 2 or np.ptp(x[half]) == 0:
        return None
    return float(np.polyfit(x[half], y[half], 1)[0])


def run_timeseries_suite(
    series,
    window: int,
    alpha: float,
    alpha_lo: float,
    alpha_hi: float,
    drift_rate: float,
    warmup: int | None = None,
) -> dict:
    """Inject drift, run all three modes on the same series, and summarize."""
    drifted = inject_drift(series, drift_rate) if drift_rate != 0.0 else list(series)
    results = {}
    summary = {}
    for mode in MODES:
        config = WindowConfig(
            window=window,
            mode=mode,
            alpha=alpha,
            alpha_lo=alpha_lo,
            alpha_hi=alpha_hi,
            warmup=warmup,
        )
        steps = run_windowed(drifted, config)
        profile = length_vs_bias_profile(steps, drift_rate)
        finite = [ln for _, ln in profile if math.isfinite(ln)]
        summary[mode] = {
            "mean_coverage": float(np.mean([s.covered for s in steps])),
            "final_rolling_coverage": steps[-1].rolling_coverage,
            "mean_length": float(np.mean(finite)) if finite else None,
            "length_vs_bias_slope": _fit_slope(profile) if drift_rate != 0.0 else None,
            "steps_emitted": len(steps),
        }
        results[mode] = steps
    return {"summary": summary, "results": results}


# ---------------------------------------------------------------------------
# verify (seeded invariant checks)
# ---------------------------------------------------------------------------

def _random_records(rng: np.random.Generator, n: int, family: ScoreFamily, n_s: int = 20):
    y = 10.0 + 5.0 * rng.standard_normal(n)
    if family is ScoreFamily.L1:
        noise = 2.0 * rng.standard_normal(n)
        return [PredictionRecord(y_true=float(yi), point=float(yi + e)) for yi, e in zip(y, noise)]
    noise = 2.0 * rng.standard_normal((n, n_s))
    return [
        PredictionRecord(y_true=float(yi), samples=yi + row) for yi, row in zip(y, noise)
    ]


def _random_spec(rng: np.random.Generator, family: ScoreFamily) -> ScoreSpec:
    if family is ScoreFamily.L1:
        return ScoreSpec.l1()
    lo = float(rng.uniform(0.02, 0.3))
    hi = float(rng.uniform(0.02, min(0.3, 0.95 - lo)))
    return ScoreSpec.cqr(lo, hi)


def _pick_family(rng: np.random.Generator) -> ScoreFamily:
    return ScoreFamily.L1 if rng.random() < 0.5 else ScoreFamily.CQR


def _check_score_identity(rng, trials):
    for i in range(trials):
        family = _pick_family(rng)
        spec = _random_spec(rng, family)
        for rec in _random_records(rng, 5, family):
            pair = asymmetric_score(rec, spec)
            if symmetric_score(rec, spec) != max(pair):
                return {"trial": i, "family": family.value, "pair": list(pair)}
    return None


def _check_score_translation(rng, trials):
    for i in range(trials):
        family = _pick_family(rng)
        spec = _random_spec(rng, family)
        rec = _random_records(rng, 1, family)[0]
        b = float(rng.uniform(-5, 5))
        base = asymmetric_score(rec, spec)
        shifted = asymmetric_score(rec.shifted(b), spec)
        if not (
            math.isclose(shifted.s_lo, base.s_lo + b, rel_tol=1e-9, abs_tol=1e-9)
            and math.isclose(shifted.s_hi, base.s_hi - b, rel_tol=1e-9, abs_tol=1e-9)
        ):
            return {"trial": i, "b": b, "base": list(base), "shifted": list(shifted)}
    return None


def _check_quantile_translation(rng, trials):
    for i in range(trials):
        n = int(rng.integers(1, 60))
        scores = rng.standard_normal(n) * 3.0
        alpha = float(rng.uniform(0.02, 0.6))
        b = float(rng.uniform(-10, 10))
        base = conformal_quantile(scores, alpha)
        moved = conformal_quantile(scores + b, alpha)
        if base.degenerate != moved.degenerate:
            return {"trial": i, "n": n, "alpha": alpha}
        if not base.degenerate and not math.isclose(
            moved.value, base.value + b, rel_tol=1e-9, abs_tol=1e-9
        ):
            return {"trial": i, "n": n, "alpha": alpha, "b": b}
    return None


def _check_quantile_alpha_monotonic(rng, trials):
    for i in range(trials):
        n = int(rng.integers(1, 60))
        scores = rng.standard_normal(n)
        a1 = float(rng.uniform(0.02, 0.9))
        a2 = float(rng.uniform(0.02, 0.9))
        lo_a, hi_a = min(a1, a2), max(a1, a2)
        q_small = conformal_quantile(scores, lo_a)
        q_large = conformal_quantile(scores, hi_a)
        small = math.inf if q_small.degenerate else q_small.value
        large = math.inf if q_large.degenerate else q_large.value
        if small < large:
            return {"trial": i, "n": n, "alphas": [lo_a, hi_a]}
    return None


def _check_quantile_membership(rng, trials):
    for i in range(trials):
        n = int(rng.integers(1, 60))
        scores = rng.standard_normal(n)
        alpha = float(rng.uniform(0.02, 0.9))
        q = conformal_quantile(scores, alpha)
        perm = conformal_quantile(rng.permutation(scores), alpha)
        if q != perm:
            return {"trial": i, "n": n, "alpha": alpha, "reason": "permutation"}
        if not q.degenerate and q.value not in scores:
            return {"trial": i, "n": n, "alpha": alpha, "reason": "membership"}
    return None


def _sym_lengths(cal, test, spec, alpha):
    fitted = fit_symmetric(cal, spec, alpha)
    return [predict_interval_symmetric(r, fitted, spec).length for r in test]


def _asym_endpoints(cal, test, spec, alpha_lo, alpha_hi):
    fitted = fit_asymmetric(cal, spec, alpha_lo, alpha_hi)
    return [
        (iv.lo, iv.hi)
        for iv in (predict_interval_asymmetric(r, fitted, spec) for r in test)
    ]


def _check_symmetric_growth_bound(rng, trials):
    for i in range(trials):
        family = _pick_family(rng)
        spec = _random_spec(rng, family)
        cal = _random_records(rng, 40, family)
        test = _random_records(rng, 5, family)
        b = float(rng.uniform(-4, 4))
        base = _sym_lengths(cal, test, spec, 0.1)
        moved = _sym_lengths(shift_records(cal, b), shift_records(test, b), spec, 0.1)
        for l0, lb in zip(base, moved):
            if lb > l0 + 2.0 * abs(b) + 1e-9:
                return {"trial": i, "b": b, "length_0": l0, "length_b": lb}
    return None


def _check_asymmetric_endpoint_invariance(rng, trials):
    for i in range(trials):
        family = _pick_family(rng)
        spec = _random_spec(rng, family)
        cal = _random_records(rng, 40, family)
        test = _random_records(rng, 5, family)
        b = float(rng.uniform(-4, 4))
        base = _asym_endpoints(cal, test, spec, 0.05, 0.05)
        moved = _asym_endpoints(
            shift_records(cal, b), shift_records(test, b), spec, 0.05, 0.05
        )
        for (lo0, hi0), (lob, hib) in zip(base, moved):
            if not (
                math.isclose(lo0, lob, rel_tol=1e-9, abs_tol=1e-9)
                and math.isclose(hi0, hib, rel_tol=1e-9, abs_tol=1e-9)
            ):
                return {"trial": i, "b": b, "base": [lo0, hi0], "moved": [lob, hib]}
    return None


def _check_crossover_condition(rng, trials):
    for i in range(trials):
        family = _pick_family(rng)
        spec = _random_spec(rng, family)
        cal = _random_records(rng, 40, family)
        test = _random_records(rng, 5, family)
        b = float(rng.uniform(-4, 4))
        sym0 = fit_symmetric(cal, spec, 0.1)
        asym0 = fit_asymmetric(cal, spec, 0.05, 0.05)
        cal_b = shift_records(cal, b)
        test_b = shift_records(test, b)
        sym_b = fit_symmetric(cal_b, spec, 0.1)
        asym_b = fit_asymmetric(cal_b, spec, 0.05, 0.05)
        for rec, rec_b in zip(test, test_b):
            l_sym0 = predict_interval_symmetric(rec, sym0, spec).length
            l_asym0 = predict_interval_asymmetric(rec, asym0, spec).length
            if 2.0 * abs(b) >= l_asym0 - l_sym0:
                l_sym_b = predict_interval_symmetric(rec_b, sym_b, spec).length
                l_asym_b = predict_interval_asymmetric(rec_b, asym_b, spec).length
                if l_asym_b > l_sym_b + 1e-9:
                    return {"trial": i, "b": b, "sym_b": l_sym_b, "asym_b": l_asym_b}
    return None


def _check_objective_quasiconvexity(rng, trials):
    for i in range(trials):
        family = _pick_family(rng)
        spec = _random_spec(rng, family)
        cal = _random_records(rng, 30, family)
        obj = SymmetricLengthObjective(cal, spec, 0.1)
        c1, c2, c3 = sorted(rng.uniform(-6, 6, size=3))
        if obj(c2) > max(obj(c1), obj(c3)) + 1e-9:
            return {"trial": i, "triple": [c1, c2, c3]}
    return None


def _check_effective_alpha(rng, trials):
    for i in range(trials):
        n = int(rng.integers(1, 500))
        alpha = float(rng.uniform(0.01, 0.99))
        a_hat = effective_alpha(n, alpha)
        scaled = a_hat * (n + 1)
        if not math.isclose(scaled, round(scaled), abs_tol=1e-6):
            return {"trial": i, "n": n, "alpha": alpha, "reason": "not a multiple of 1/(n+1)"}
        if a_hat > alpha + 1e-12 or alpha - a_hat >= 1.0 / (n + 1) + 1e-12:
            return {"trial": i, "n": n, "alpha": alpha, "a_hat": a_hat}
    return None


def _check_generator_determinism(rng, trials):
    for i in range(min(trials, 5)):
        config = SyntheticConfig(
            n_cal=8,
            n_test=8,
            n_samples=6,
            truth_mu=10.0,
            truth_sigma=5.0,
            noise=NoiseSpec.gaussian(0.0, 2.0),
            seed=int(rng.integers(0, 2**31)),
        )
        a_cal, a_test = generate(config)
        b_cal, b_test = generate(config)
        for x, z in zip(a_cal + a_test, b_cal + b_test):
            if x.y_true != z.y_true or not np.array_equal(x.samples, z.samples):
                return {"trial": i, "seed": config.seed}
    return None


def _check_branch_selection(rng, trials):
    for i in range(trials):
        family = _pick_family(rng)
        spec = _random_spec(rng, family)
        records = _random_records(rng, 10, family)
        big = 1e4
        for sign in (1.0, -1.0):
            for rec in shift_records(records, sign * big):
                pair = asymmetric_score(rec, spec)
                want = pair.s_lo if sign > 0 else pair.s_hi
                if symmetric_score(rec, spec) != want:
                    return {"trial": i, "sign": sign}
    return None


VERIFY_CHECKS = (
    ("score_pair_max_identity", _check_score_identity),
    ("score_translation", _check_score_translation),
    ("quantile_translation_equivariance", _check_quantile_translation),
    ("quantile_alpha_monotonicity", _check_quantile_alpha_monotonic),
    ("quantile_permutation_and_membership", _check_quantile_membership),
    ("symmetric_length_growth_bound", _check_symmetric_growth_bound),
    ("asymmetric_endpoint_invariance", _check_asymmetric_endpoint_invariance),
    ("crossover_condition", _check_crossover_condition),
    ("objective_quasiconvexity", _check_objective_quasiconvexity),
    ("effective_alpha_identity", _check_effective_alpha),
    ("generator_determinism", _check_generator_determinism),
    ("branch_selection_under_large_bias", _check_branch_selection),
)


def run_verify(seed: int, trials: int) -> dict:
    """Run every invariant check with a seeded generator; dump counterexamples."""
    if trials < 1:
        raise ValueError(f"trials must be at least 1, got {trials}")
    checks = []
    for index, (name, fn) in enumerate(VERIFY_CHECKS):
        rng = np.random.default_rng([seed, index])
        counterexample = fn(rng, trials)
        checks.append(
            {"name": name, "passed": counterexample is None, "counterexample": counterexample}
        )
    return {"checks": checks, "all_passed": all(c["passed"] for c in checks)}


# ---------------------------------------------------------------------------
# argument helpers
# ---------------------------------------------------------------------------

def _score_spec_from_args(args) -> ScoreSpec:
    if args.score == "l1":
        return ScoreSpec.l1()
    return ScoreSpec.cqr(args.inner_lo, args.inner_hi)


def _alphas_from_args(args) -> tuple[float, float, float]:
    alpha = args.alpha
    alpha_lo = args.alpha_lo if args.alpha_lo is not None else alpha / 2.0
    alpha_hi = args.alpha_hi if args.alpha_hi is not None else alpha / 2.0
    return alpha, alpha_lo, alpha_hi


def _optimizer_from_args(args) -> OptimizerConfig:
    init: str | float = args.init
    if init not in ("mean_difference", "zero"):
        try:
            init = float(init)
        except ValueError:
            raise ValueError(f"--init must be mean_difference, zero, or a number, got {init!r}")
    return OptimizerConfig(
        learning_rate=args.learning_rate,
        tolerance=args.tolerance,
        max_iterations=args.max_iterations,
        init=init,
    )


def _parse_bias_grid(text: str) -> list[float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"--bias-grid must look like lo:hi:step, got {text!r}")
    lo, hi, step = (float(p) for p in parts)
    if not lo < hi:
        raise ValueError(f"--bias-grid needs lo < hi, got {text!r}")
    if step <= 0:
        raise ValueError(f"--bias-grid needs a positive step, got {text!r}")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [lo + step * i for i in range(count)]


def _synthetic_points(args) -> tuple[list[PredictionRecord], list[PredictionRecord], SyntheticConfig]:
    from dataclasses import replace

    config = skew_suite(seed=args.seed)[args.skew]
    config = replace(
        config,
        n_cal=args.n_cal,
        n_test=args.n_test,
        n_samples=args.n_samples,
    )
    cal, test = generate(config)
    return cal, test, config


def _spec_for_records(args, records) -> ScoreSpec:
    """Score spec from flags, defaulting the family to the payload kind."""
    if args.score is None:
        family = "l1" if records[0].is_point else "cqr"
    else:
        family = args.score
    if family == "l1":
        return ScoreSpec.l1()
    return ScoreSpec.cqr(args.inner_lo, args.inner_hi)


# ---------------------------------------------------------------------------
# subcommand drivers
# ---------------------------------------------------------------------------

def _cmd_sweep(args) -> int:
    if args.input is not None:
        if args.test_input is None:
            raise ValueError("sweep with --input also needs --test-input")
        cal, _ = read_points_csv(args.input)
        test, _ = read_points_csv(args.test_input)
        data_config = {"input": args.input, "test_input": args.test_input}
    else:
        cal, test, config = _synthetic_points(args)
        data_config = {
            "skew": args.skew,
            "seed": config.seed,
            "n_cal": config.n_cal,
            "n_test": config.n_test,
            "n_samples": config.n_samples,
        }
    spec = _spec_for_records(args, cal)
    alpha, alpha_lo, alpha_hi = _alphas_from_args(args)
    grid = _parse_bias_grid(args.bias_grid)
    report = run_sweep(cal, test, spec, alpha, alpha_lo, alpha_hi, grid, _optimizer_from_args(args))

    base = _base_path(args.output)
    payload = _report_header(
        "sweep",
        {
            **data_config,
            "score": spec.family.value,
            "inner_lo": spec.inner_lo,
            "inner_hi": spec.inner_hi,
            "alpha": alpha,
            "alpha_lo": alpha_lo,
            "alpha_hi": alpha_hi,
            "bias_grid": args.bias_grid,
        },
    )
    payload.update(report)
    write_json_report(base.with_suffix(".json"), payload)
    _write_sweep_csv(base.with_suffix(".csv"), report["rows"])
    print(f"sweep: {len(report['rows'])} rows -> {base.with_suffix('.json')}")
    return 0


def _cmd_table(args) -> int:
    metrics: dict[str, tuple[list[PredictionRecord], list[str]]] = {}
    for path in args.input:
        records, groups = read_points_csv(path)
        if groups is None:
            raise ValueError(f"{path}: table needs a group_id column for leave-one-out")
        metrics[Path(path).stem] = (records, groups)
    first = next(iter(metrics.values()))[0]
    spec = _spec_for_records(args, first)
    alpha, alpha_lo, alpha_hi = _alphas_from_args(args)
    report = run_table(metrics, spec, alpha, alpha_lo, alpha_hi, _optimizer_from_args(args))

    base = _base_path(args.output)
    payload = _report_header(
        "table",
        {
            "inputs": list(args.input),
            "score": spec.family.value,
            "inner_lo": spec.inner_lo,
            "inner_hi": spec.inner_hi,
            "alpha": alpha,
            "alpha_lo": alpha_lo,
            "alpha_hi": alpha_hi,
        },
    )
    payload.update(report)
    write_json_report(base.with_suffix(".json"), payload)
    _write_table_csv(base.with_suffix(".csv"), report["rows"])
    print(f"table: {len(report['rows'])} metrics -> {base.with_suffix('.json')}")
    return 0


def _cmd_timeseries(args) -> int:
    if args.input is not None:
        series = read_series_csv(args.input)
        data_config = {"input": args.input}
    else:
        series = weather_series(args.steps, args.seed)
        data_config = {"synthetic_weather": True, "steps": args.steps, "seed": args.seed}
    alpha, alpha_lo, alpha_hi = _alphas_from_args(args)
    suite = run_timeseries_suite(
        series, args.window, alpha, alpha_lo, alpha_hi, args.drift, warmup=args.warmup
    )

    base = _base_path(args.output)
    for mode, steps in suite["results"].items():
        write_step_results_csv(Path(f"{base}_{mode}.csv"), steps)
    payload = _report_header(
        "timeseries",
        {
            **data_config,
            "window": args.window,
            "warmup": args.warmup,
            "alpha": alpha,
            "alpha_lo": alpha_lo,
            "alpha_hi": alpha_hi,
            "drift": args.drift,
        },
    )
    payload["summary"] = suite["summary"]
    write_json_report(Path(f"{base}_summary.json"), payload)
    print(f"timeseries: {len(series)} steps, 3 modes -> {base}_summary.json")
    return 0


def _cmd_estimate_bias(args) -> int:
    records, _ = read_points_csv(args.input)
    spec = _spec_for_records(args, records)
    estimate = estimate_bias(records, spec, args.alpha, _optimizer_from_args(args))
    payload = _report_header(
        "estimate-bias",
        {
            "input": args.input,
            "score": spec.family.value,
            "inner_lo": spec.inner_lo,
            "inner_hi": spec.inner_hi,
            "alpha": args.alpha,
        },
    )
    payload["result"] = {
        "b_eff": estimate.b_eff,
        "iterations": estimate.iterations,
        "final_objective": estimate.final_objective,
        "converged": estimate.converged,
        "mean_bias": mean_bias(records),
    }
    if args.oracle is not None:
        lo, hi, step = (float(p) for p in args.oracle.split(":"))
        b_star, obj_star = grid_oracle(records, spec, args.alpha, lo, hi, step)
        payload["result"]["oracle_b"] = b_star
        payload["result"]["oracle_objective"] = obj_star
    if args.output is not None:
        write_json_report(_base_path(args.output).with_suffix(".json"), payload)
    else:
        print(json.dumps(_jsonable(payload), sort_keys=True, indent=2))
    return 0


def _cmd_verify(args) -> int:
    report = run_verify(args.seed, args.trials)
    payload = _report_header("verify", {"seed": args.seed, "trials": args.trials})
    payload.update(report)
    for check in report["checks"]:
        status = "pass" if check["passed"] else "FAIL"
        print(f"{status}  {check['name']}")
        if not check["passed"]:
            print(f"      counterexample: {check['counterexample']}")
    if args.output is not None:
        write_json_report(_base_path(args.output).with_suffix(".json"), payload)
    return 0 if report["all_passed"] else 1


def _cmd_synth(args) -> int:
    base = _base_path(args.output, suffix_to_strip=(".json", ".csv"))
    if args.kind == "points":
        cal, test, config = _synthetic_points(args)
        if args.format == "csv":
            write_points_csv(Path(f"{base}_cal.csv"), cal)
            write_points_csv(Path(f"{base}_test.csv"), test)
            print(f"synth: {len(cal)} cal + {len(test)} test records -> {base}_cal.csv")
        else:
            payload = _report_header(
                "synth",
                {"kind": "points", "skew": args.skew, "seed": config.seed},
            )
            payload["cal"] = [_record_payload(r) for r in cal]
            payload["test"] = [_record_payload(r) for r in test]
            write_json_report(base.with_suffix(".json"), payload)
            print(f"synth: {len(cal)} cal + {len(test)} test records -> {base.with_suffix('.json')}")
    else:
        series = weather_series(args.steps, args.seed)
        if args.drift != 0.0:
            series = inject_drift(series, args.drift)
        path = Path(f"{base}_series.csv")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "y_true", "y_pred"])
            for p in series:
                writer.writerow([p.t, repr(p.y_true), repr(p.y_pred)])
        print(f"synth: {len(series)} series steps -> {path}")
    return 0


def _record_payload(rec: PredictionRecord) -> dict:
    if rec.is_point:
        return {"y_true": rec.y_true, "y_pred": rec.point}
    return {"y_true": rec.y_true, "samples": [float(v) for v in rec.samples]}


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_score_flags(sub, default_score=None):
    sub.add_argument("--score", choices=["l1", "cqr"], default=default_score)
    sub.add_argument("--inner-lo", type=float, default=0.05)
    sub.add_argument("--inner-hi", type=float, default=0.05)


def _add_alpha_flags(sub):
    sub.add_argument("--alpha", type=float, default=0.1)
    sub.add_argument("--alpha-lo", type=float, default=None)
    sub.add_argument("--alpha-hi", type=float, default=None)


def _add_optimizer_flags(sub):
    sub.add_argument("--learning-rate", type=float, default=0.1)
    sub.add_argument("--tolerance", type=float, default=1e-8)
    sub.add_argument("--max-iterations", type=int, default=20_000)
    sub.add_argument("--init", default="mean_difference")


def _add_synth_point_flags(sub):
    sub.add_argument("--skew", choices=["right_skew", "no_skew", "left_skew"], default="no_skew")
    sub.add_argument("--n-cal", type=int, default=1000)
    sub.add_argument("--n-test", type=int, default=1000)
    sub.add_argument("--n-samples", type=int, default=1000)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cpbias",
        description="Conformal prediction intervals under prediction bias",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    sweep = commands.add_parser("sweep", help="bias sweep over a grid of injected shifts")
    sweep.add_argument("--input", help="calibration CSV (point or wide-sample format)")
    sweep.add_argument("--test-input", help="test CSV matching --input's format")
    _add_synth_point_flags(sweep)
    sweep.add_argument("--seed", type=int, default=0)
    _add_score_flags(sweep)
    _add_alpha_flags(sweep)
    _add_optimizer_flags(sweep)
    sweep.add_argument("--bias-grid", default="-2:2:0.25")
    sweep.add_argument("--output", required=True)
    sweep.set_defaults(func=_cmd_sweep)

    table = commands.add_parser("table", help="leave-one-out length comparison per metric")
    table.add_argument("--input", action="append", required=True, help="per-metric CSV; repeatable")
    _add_score_flags(table)
    _add_alpha_flags(table)
    _add_optimizer_flags(table)
    table.add_argument("--output", required=True)
    table.set_defaults(func=_cmd_table)

    ts = commands.add_parser("timeseries", help="windowed run of all three modes")
    ts.add_argument("--input", help="series CSV with header t,y_true,y_pred; omit for synthetic weather")
    ts.add_argument("--steps", type=int, default=21_000)
    ts.add_argument("--seed", type=int, default=0)
    ts.add_argument("--window", type=int, default=1000)
    ts.add_argument("--warmup", type=int, default=None)
    ts.add_argument("--drift", type=float, default=0.0)
    _add_alpha_flags(ts)
    ts.add_argument("--output", required=True)
    ts.set_defaults(func=_cmd_timeseries)

    est = commands.add_parser("estimate-bias", help="fit the effective bias of a calibration file")
    est.add_argument("--input", required=True)
    _add_score_flags(est)
    est.add_argument("--alpha", type=float, default=0.1)
    _add_optimizer_flags(est)
    est.add_argument("--oracle", help="also run the grid oracle, as lo:hi:step")
    est.add_argument("--output")
    est.set_defaults(func=_cmd_estimate_bias)

    verify = commands.add_parser("verify", help="seeded invariant checks")
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--trials", type=int, default=100)
    verify.add_argument("--output")
    verify.set_defaults(func=_cmd_verify)

    synth = commands.add_parser("synth", help="emit generated data")
    synth.add_argument("--kind", choices=["points", "series"], default="points")
    _add_synth_point_flags(synth)
    synth.add_argument("--steps", type=int, default=21_000)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--drift", type=float, default=0.0)
    synth.add_argument("--format", choices=["csv", "json"], default="csv")
    synth.add_argument("--output", required=True)
    synth.set_defaults(func=_cmd_synth)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed the usage message
        return int(exc.code) if exc.code else 0
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def run() -> None:
    sys.exit(main())
