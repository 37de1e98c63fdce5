"""Evaluation metrics: accuracy, physical compliance and asymmetry risk.

All metrics are computed on de-normalized millimetre predictions with
masking: padded steps never enter a numerator or denominator. Ties count
as compliant everywhere (a "fall" and an "under-prediction" are both
strict inequalities).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .validation import as_bool_mask, as_step_matrix

DEFAULT_UNDERPRED_THRESHOLD_MM = 80.0

REPORT_CSV_COLUMNS = [
    "lambda", "beta", "scale",
    "mae", "mlns", "mstns", "msqns", "underpred", "underpred80",
]


@dataclass
class EvalReport:
    """Metric bundle for one model on one split.

    Percentages lie in [0, 100]; `mlns` is None when no prediction falls,
    `underpred80` is None when no target reaches the length threshold.
    """

    mae_first: float
    mae_mean: float
    rmse_first: float
    rmse_mean: float
    msqns: float
    mstns: float
    mlns: float | None
    underpred: float
    underpred80: float | None
    n_windows: int
    n_steps: int

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, payload: dict) -> "EvalReport":
        return cls(**payload)


def _checked(predictions, targets, mask):
    predictions = as_step_matrix(predictions, "predictions")
    targets = as_step_matrix(targets, "targets")
    if predictions.shape != targets.shape:
        raise ValueError(f"shape mismatch: {predictions.shape} vs {targets.shape}")
    if mask is None:
        mask = np.ones(predictions.shape, dtype=bool)
    else:
        mask = as_bool_mask(mask, "mask")
        if mask.ndim == 1:
            mask = mask[np.newaxis, :]
        if mask.shape != predictions.shape:
            raise ValueError(f"mask shape {mask.shape} != {predictions.shape}")
    return predictions, targets, mask


def accuracy_metrics(predictions, targets, mask=None):
    """(mae_first, mae_mean, rmse_first, rmse_mean) over valid steps.

    "first" restricts to the first step of the horizon; "mean" pools all
    valid steps of all horizons.
    """
    predictions, targets, mask = _checked(predictions, targets, mask)
    if not mask.any():
        raise ValueError("accuracy metrics undefined: no valid steps")
    err = np.abs(predictions - targets)
    first_mask = mask[:, 0]
    if not first_mask.any():
        raise ValueError("accuracy metrics undefined: no valid first steps")
    mae_first = float(err[first_mask, 0].mean())
    rmse_first = float(np.sqrt((err[first_mask, 0] ** 2).mean()))
    mae_mean = float(err[mask].mean())
    rmse_mean = float(np.sqrt((err[mask] ** 2).mean()))
    return mae_first, mae_mean, rmse_first, rmse_mean


def negative_slope_metrics(predictions, mask=None):
    """(msqns, mstns, mlns): how often and how hard predictions fall.

    msqns: % of windows (among those with at least one valid comparison)
    containing at least one strict fall; mstns: % of valid comparisons
    that fall; mlns: mean magnitude of the falls, None if there are none.
    """
    predictions = as_step_matrix(predictions, "predictions")
    if mask is None:
        mask = np.ones(predictions.shape, dtype=bool)
    else:
        mask = as_bool_mask(mask, "mask")
        if mask.ndim == 1:
            mask = mask[np.newaxis, :]
    drops = predictions[:, :-1] - predictions[:, 1:]
    pair_mask = mask[:, :-1] & mask[:, 1:]
    falls = (drops > 0.0) & pair_mask
    n_pairs = int(pair_mask.sum())
    if n_pairs == 0:
        return 0.0, 0.0, None
    windows_with_pairs = pair_mask.any(axis=1)
    msqns = 100.0 * falls.any(axis=1).sum() / windows_with_pairs.sum()
    mstns = 100.0 * falls.sum() / n_pairs
    mlns = float(drops[falls].mean()) if falls.any() else None
    return float(msqns), float(mstns), mlns


def underprediction_metrics(
    predictions, targets, mask=None, threshold_mm: float = DEFAULT_UNDERPRED_THRESHOLD_MM
):
    """(underpred, underpred80): % of valid steps predicted strictly low.

    The second value restricts to steps whose target is at least
    `threshold_mm`; None when no step qualifies.
    """
    predictions, targets, mask = _checked(predictions, targets, mask)
    if not mask.any():
        raise ValueError("under-prediction metrics undefined: no valid steps")
    under = (predictions < targets) & mask
    underpred = 100.0 * under.sum() / mask.sum()
    qualifying = mask & (targets >= threshold_mm)
    if qualifying.any():
        underpred80 = float(100.0 * (under & qualifying).sum() / qualifying.sum())
    else:
        underpred80 = None
    return float(underpred), underpred80


def evaluate_predictions(
    predictions, targets, mask=None, threshold_mm: float = DEFAULT_UNDERPRED_THRESHOLD_MM
) -> EvalReport:
    """Full metric bundle over one prediction matrix."""
    predictions, targets, mask = _checked(predictions, targets, mask)
    mae_first, mae_mean, rmse_first, rmse_mean = accuracy_metrics(predictions, targets, mask)
    msqns, mstns, mlns = negative_slope_metrics(predictions, mask)
    underpred, underpred80 = underprediction_metrics(predictions, targets, mask, threshold_mm)
    return EvalReport(
        mae_first=mae_first,
        mae_mean=mae_mean,
        rmse_first=rmse_first,
        rmse_mean=rmse_mean,
        msqns=msqns,
        mstns=mstns,
        mlns=mlns,
        underpred=underpred,
        underpred80=underpred80,
        n_windows=int(predictions.shape[0]),
        n_steps=int(mask.sum()),
    )


def report_csv_row(report: EvalReport, loss_lambda: float, loss_beta: float, scale: bool) -> list:
    """Row for the one-line results CSV (constraint weights + metrics)."""
    def fmt(value):
        return "" if value is None else repr(float(value))

    return [
        repr(float(loss_lambda)),
        repr(float(loss_beta)),
        str(bool(scale)).lower(),
        fmt(report.mae_mean),
        fmt(report.mlns),
        fmt(report.mstns),
        fmt(report.msqns),
        fmt(report.underpred),
        fmt(report.underpred80),
    ]
