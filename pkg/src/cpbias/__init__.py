"""Split conformal prediction intervals that stay tight under prediction bias.

Symmetric adjustments widen an interval equally on both sides, so a
systematic shift of the predictions inflates them; asymmetric adjustments
calibrate each side on its own signed score stream and are immune to any
constant shift.  This package provides both interval constructions for
absolute-residual and sample-quantile scores, an estimator for the
effective bias of a predictor, windowed calibration for drifting series,
seeded synthetic data, and a CLI that ties them together.
"""

from .bias import (
    BiasEstimate,
    OptimizerConfig,
    estimate_bias,
    grid_oracle,
    mean_bias,
    objective,
    refined_grid_oracle,
)
from .calibration import (
    AsymmetricCalibration,
    Interval,
    SymmetricCalibration,
    empirical_coverage,
    fit_asymmetric,
    fit_symmetric,
    predict_interval_asymmetric,
    predict_interval_symmetric,
    shift_records,
)
from .quantile import (
    MiscoverageSpec,
    QuantileValue,
    TiedScoresWarning,
    conformal_quantile,
    effective_alpha,
    plain_quantile,
)
from .scores import (
    PredictionRecord,
    ScoreFamily,
    ScorePair,
    ScoreSpec,
    adjustment_points,
    asymmetric_score,
    symmetric_score,
)
from .synthgen import NoiseSpec, SyntheticConfig, generate, skew_suite, weather_series
from .timeseries import (
    SeriesPoint,
    StepResult,
    WindowConfig,
    inject_drift,
    length_vs_bias_profile,
    run_windowed,
)

__version__ = "0.1.0"

__all__ = [
    "AsymmetricCalibration",
    "BiasEstimate",
    "Interval",
    "MiscoverageSpec",
    "NoiseSpec",
    "OptimizerConfig",
    "PredictionRecord",
    "QuantileValue",
    "ScoreFamily",
    "ScorePair",
    "ScoreSpec",
    "SeriesPoint",
    "StepResult",
    "SymmetricCalibration",
    "SyntheticConfig",
    "TiedScoresWarning",
    "WindowConfig",
    "adjustment_points",
    "asymmetric_score",
    "conformal_quantile",
    "effective_alpha",
    "empirical_coverage",
    "estimate_bias",
    "fit_asymmetric",
    "fit_symmetric",
    "generate",
    "grid_oracle",
    "inject_drift",
    "length_vs_bias_profile",
    "mean_bias",
    "objective",
    "plain_quantile",
    "predict_interval_asymmetric",
    "predict_interval_symmetric",
    "refined_grid_oracle",
    "run_windowed",
    "shift_records",
    "skew_suite",
    "symmetric_score",
    "weather_series",
    "__version__",
]
