"""Forecasting-based early anomaly detection for multivariate plant data.

The package trains a stacked GRU forecaster on normal operation, flags
anomalies where the EWMA-smoothed squared forecast residual crosses a
quantile threshold, and benchmarks the result against a per-mode dynamic-PCA
baseline using an early-detection (NAB-style) score. A reduced-order plant
surrogate generates labeled corpora with setpoint transients and DoS,
Integrity, and Noise attacks.
"""

from . import errors
from .detector import (
    DetectionRun,
    ErrorTrace,
    ForecastDetector,
    alpha_from_window,
    build_error_trace,
    detect,
    ewma,
    fit_threshold,
    residual_error,
)
from .dpca import DpcaDetector, ModeBankScore, bank_average, build_lag_matrix
from .eigen import jacobi_eigh
from .forecaster import (
    GruForecaster,
    TrainConfig,
    TrainReport,
    dataset_loss,
    train_stack,
)
from .frames import (
    ChannelMeta,
    ChannelRole,
    TimeSeriesFrame,
    load_dataset,
    load_schema,
    save_schema,
    write_frame_csv,
)
from .gru import GruStack, forward_stack, init_gru_stack, loss_and_grads, mse_loss
from .nab import (
    STANDARD_PROFILE,
    AnomalyWindow,
    NabReport,
    ScoreProfile,
    build_windows,
    concat_samples,
    positional_score,
    score_run,
    score_scoring_input,
)
from .optim import RmsProp, clip_gradients
from .pipeline import (
    Corpus,
    CorpusSample,
    compare_models,
    detect_samples,
    load_corpus,
    score_by_mode,
    score_detections,
    train_dpca_bank,
    train_forecast_detector,
)
from .preprocessing import StandardNormalizer, WindowPair, make_windows, stack_windows
from .serialize import load_model, save_model
from .simulator import (
    TRANSIENT_VARIANTS,
    AttackSpec,
    PlantConfig,
    SampleLabel,
    default_config,
    default_plan,
    default_schema,
    generate_corpus,
    inject_attack,
    simulate,
    simulate_normal,
    simulate_transient,
)

__version__ = "0.1.0"

__all__ = [
    "AnomalyWindow",
    "AttackSpec",
    "ChannelMeta",
    "ChannelRole",
    "Corpus",
    "CorpusSample",
    "DetectionRun",
    "DpcaDetector",
    "ErrorTrace",
    "ForecastDetector",
    "GruForecaster",
    "GruStack",
    "ModeBankScore",
    "NabReport",
    "PlantConfig",
    "RmsProp",
    "STANDARD_PROFILE",
    "SampleLabel",
    "ScoreProfile",
    "StandardNormalizer",
    "TRANSIENT_VARIANTS",
    "TimeSeriesFrame",
    "TrainConfig",
    "TrainReport",
    "WindowPair",
    "alpha_from_window",
    "bank_average",
    "build_error_trace",
    "build_lag_matrix",
    "build_windows",
    "clip_gradients",
    "compare_models",
    "concat_samples",
    "dataset_loss",
    "default_config",
    "default_plan",
    "default_schema",
    "detect",
    "detect_samples",
    "errors",
    "ewma",
    "fit_threshold",
    "forward_stack",
    "generate_corpus",
    "init_gru_stack",
    "inject_attack",
    "jacobi_eigh",
    "load_corpus",
    "load_dataset",
    "load_model",
    "load_schema",
    "loss_and_grads",
    "make_windows",
    "mse_loss",
    "positional_score",
    "residual_error",
    "save_model",
    "save_schema",
    "score_by_mode",
    "score_detections",
    "score_run",
    "score_scoring_input",
    "simulate",
    "simulate_normal",
    "simulate_transient",
    "stack_windows",
    "train_dpca_bank",
    "train_forecast_detector",
    "train_stack",
    "write_frame_csv",
]
