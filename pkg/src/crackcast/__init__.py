"""Constrained Bayesian multi-horizon forecasting of rail crack lengths."""

from .checkpoint import load_checkpoint, save_checkpoint
from .estimator import CrackForecaster
from .losses import (
    LossSpec,
    asymmetry_penalty,
    bayesian_loss,
    monotonicity_penalty,
    total_loss,
)
from .metrics import (
    EvalReport,
    accuracy_metrics,
    evaluate_predictions,
    negative_slope_metrics,
    underprediction_metrics,
)
from .network import (
    ModelConfig,
    ModelParams,
    NumericalError,
    StepOutput,
    compute_gradients,
    forward,
    forward_batch,
    init_params,
    parameter_count,
)
from .scaling import WindowScaler
from .series import (
    DefectSeries,
    RegularSeries,
    filter_physical_drops,
    read_visits_csv,
    validate_and_interpolate,
    write_visits_csv,
)
from .synthetic import GenConfig, generate_corpus
from .training import AdamState, adam_step, evaluate_loss, train
from .tuner import (
    RealGene,
    SearchSpace,
    Trial,
    correlation_matrix,
    crowding_distance,
    non_dominated_sort,
    nsga2_optimize,
)
from .uncertainty import (
    ForecastDistribution,
    coverage_report,
    decompose_samples,
    mc_forecast,
)
from .windows import (
    WindowBatch,
    WindowSample,
    make_windows,
    read_windows_jsonl,
    split_by_defect,
    write_windows_jsonl,
)

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "CrackForecaster",
    "DefectSeries",
    "EvalReport",
    "ForecastDistribution",
    "GenConfig",
    "LossSpec",
    "ModelConfig",
    "ModelParams",
    "NumericalError",
    "RealGene",
    "RegularSeries",
    "SearchSpace",
    "StepOutput",
    "Trial",
    "WindowBatch",
    "WindowSample",
    "WindowScaler",
    "accuracy_metrics",
    "adam_step",
    "asymmetry_penalty",
    "bayesian_loss",
    "compute_gradients",
    "correlation_matrix",
    "coverage_report",
    "crowding_distance",
    "decompose_samples",
    "evaluate_loss",
    "evaluate_predictions",
    "filter_physical_drops",
    "forward",
    "forward_batch",
    "generate_corpus",
    "init_params",
    "load_checkpoint",
    "make_windows",
    "mc_forecast",
    "monotonicity_penalty",
    "negative_slope_metrics",
    "non_dominated_sort",
    "nsga2_optimize",
    "parameter_count",
    "read_visits_csv",
    "read_windows_jsonl",
    "save_checkpoint",
    "split_by_defect",
    "total_loss",
    "train",
    "underprediction_metrics",
    "validate_and_interpolate",
    "write_visits_csv",
    "write_windows_jsonl",
]
