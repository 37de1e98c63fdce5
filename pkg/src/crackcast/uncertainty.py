"""Monte Carlo dropout forecasting with variance decomposition.

Sampling the network S times with dropout active yields a predictive
distribution per step: the spread of the sampled means is the epistemic
(model) variance, the average predicted noise variance exp(s) is the
aleatoric part, and their sum is the total. Intervals are Gaussian,
centred on the sample mean with half-width z * sqrt(total variance).

Variances are population (1/S) quantities; the epistemic term is
computed in centred form, which is algebraically the mean-of-squares
minus squared-mean estimator but is exactly zero when every pass agrees.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from . import autodiff as ad
from .network import ModelConfig, ModelParams, forward_batch
from .scaling import WindowScaler
from .windows import WindowBatch, WindowSample

DEFAULT_MC_SAMPLES = 50
DEFAULT_LEVEL = 0.95

FORECAST_CSV_HEADER = [
    "defect_id", "step", "mean_mm", "epistemic_var", "aleatoric_var", "total_var", "lo", "hi",
]


@dataclass
class ForecastDistribution:
    """Per-step predictive distribution in millimetres, shape (windows, steps)."""

    mean: np.ndarray
    epistemic_var: np.ndarray
    aleatoric_var: np.ndarray
    total_var: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    level: float


def gaussian_z(level: float) -> float:
    if not 0.0 < level < 1.0:
        raise ValueError("confidence level must lie in (0, 1)")
    return float(ndtri(0.5 + level / 2.0))


def decompose_samples(mean_samples: np.ndarray, logvar_samples: np.ndarray):
    """(mean, epistemic, aleatoric) from S stochastic passes (axis 0)."""
    mean_samples = np.asarray(mean_samples, dtype=np.float64)
    logvar_samples = np.asarray(logvar_samples, dtype=np.float64)
    S = mean_samples.shape[0]
    if S < 2:
        raise ValueError("need at least 2 stochastic samples")
    mean = mean_samples.mean(axis=0)
    centered = mean_samples - mean
    epistemic = (centered * centered).mean(axis=0)
    aleatoric = np.exp(logvar_samples).mean(axis=0)
    return mean, epistemic, aleatoric


def pass_seed(seed: int, sample_index: int) -> int:
    """Deterministic per-pass dropout seed; independent of execution order."""
    return int(np.random.SeedSequence((seed, sample_index)).generate_state(1, np.uint64)[0])


def mc_forecast(
    params: ModelParams,
    config: ModelConfig,
    windows: WindowBatch | WindowSample,
    n_samples: int = DEFAULT_MC_SAMPLES,
    seed: int = 0,
    scaler: WindowScaler | None = None,
    level: float = DEFAULT_LEVEL,
) -> ForecastDistribution:
    """Forecast with uncertainty from `n_samples` dropout passes.

    `windows` must already be in the model's (normalized) input space;
    the fitted `scaler` converts outputs back to millimetres (variances
    scale by its squared length std). Without a scaler, outputs stay in
    the input space.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    batch = WindowBatch.from_samples([windows]) if isinstance(windows, WindowSample) else windows
    mean_stack = np.empty((n_samples, len(batch), config.horizon))
    logvar_stack = np.empty_like(mean_stack)
    for i in range(n_samples):
        mu_cols, s_cols = forward_batch(params, config, batch, dropout_seed=pass_seed(seed, i))
        mean_stack[i] = np.stack([ad.value_of(c) for c in mu_cols], axis=1)
        logvar_stack[i] = np.stack([ad.value_of(c) for c in s_cols], axis=1)

    mean, epistemic, aleatoric = decompose_samples(mean_stack, logvar_stack)
    if scaler is not None:
        var_scale = scaler.length_std_**2
        mean = scaler.inverse_transform_lengths(mean)
        epistemic = epistemic * var_scale
        aleatoric = aleatoric * var_scale
    total = epistemic + aleatoric
    half = gaussian_z(level) * np.sqrt(total)
    return ForecastDistribution(
        mean=mean,
        epistemic_var=epistemic,
        aleatoric_var=aleatoric,
        total_var=total,
        lo=mean - half,
        hi=mean + half,
        level=level,
    )


def coverage_report(
    forecast: ForecastDistribution,
    targets,
    mask,
    level: float | None = None,
) -> float:
    """Fraction of observed steps whose target falls inside the interval.

    With `level` given, intervals are rebuilt from the total variance at
    that confidence; otherwise the stored bounds are used.
    """
    targets = np.asarray(targets, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != targets.shape:
        raise ValueError("targets and mask must align")
    if not mask.any():
        raise ValueError("coverage undefined: no valid steps")
    if level is None or level == forecast.level:
        lo, hi = forecast.lo, forecast.hi
    else:
        half = gaussian_z(level) * np.sqrt(forecast.total_var)
        lo, hi = forecast.mean - half, forecast.mean + half
    inside = (targets >= lo) & (targets <= hi) & mask
    return float(inside.sum() / mask.sum())


def write_forecast_csv(path, defect_ids, forecast: ForecastDistribution) -> None:
    """One row per (window, step); `step` is 1-based within the horizon."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(FORECAST_CSV_HEADER)
        n, k = forecast.mean.shape
        for i in range(n):
            for j in range(k):
                writer.writerow(
                    [
                        defect_ids[i],
                        j + 1,
                        repr(float(forecast.mean[i, j])),
                        repr(float(forecast.epistemic_var[i, j])),
                        repr(float(forecast.aleatoric_var[i, j])),
                        repr(float(forecast.total_var[i, j])),
                        repr(float(forecast.lo[i, j])),
                        repr(float(forecast.hi[i, j])),
                    ]
                )
