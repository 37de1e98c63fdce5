"""Masked loss terms and the two constraint-integration schemes.

All losses reduce over the predicted horizon only, averaging by the
number of observed (mask-true) steps so zero-padded steps contribute
nothing. The heteroscedastic term weights squared error by 2/3 and the
log-variance regularizer by 1/3. Two physical penalties can be blended
in:

* monotonicity: a ramp on any decrease between consecutive predicted
  means (cracks cannot close);
* asymmetry: a ramp on under-prediction only, optionally scaled by
  ln(2 + target) so missing a long crack costs more than missing a
  short one.

Integration modes: ``sum`` adds the weighted penalties outside the
heteroscedastic loss; ``bayes`` moves them inside the noise-weighted
bracket, so each penalty is amplified by exp(-s) exactly like the
squared error.

Functions accept plain float64 arrays (returning floats) or autodiff
tensors (returning a scalar tensor), shaped (windows, steps) or as a
per-step column list.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .validation import as_bool_mask, as_step_matrix, dataclass_from_dict

MODE_SUM = "sum"
MODE_BAYES = "bayes"

_SQERR_WEIGHT = 2.0 / 3.0
_LOGVAR_WEIGHT = 1.0 / 3.0


@dataclass(frozen=True)
class LossSpec:
    """Constraint configuration for training and evaluation."""

    asymmetry_weight: float = 0.0    # serialized as "lambda"
    monotonicity_weight: float = 0.0  # serialized as "beta"
    scale: bool = False
    mode: str = MODE_SUM

    def __post_init__(self):
        if self.asymmetry_weight < 0 or self.monotonicity_weight < 0:
            raise ValueError("constraint weights must be >= 0")
        object.__setattr__(self, "mode", str(self.mode).lower())
        if self.mode not in (MODE_SUM, MODE_BAYES):
            raise ValueError(f"mode must be '{MODE_SUM}' or '{MODE_BAYES}', got {self.mode!r}")

    @property
    def constrained(self) -> bool:
        return self.asymmetry_weight > 0 or self.monotonicity_weight > 0

    def to_dict(self) -> dict:
        return {
            "lambda": self.asymmetry_weight,
            "beta": self.monotonicity_weight,
            "scale": self.scale,
            "mode": self.mode,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "LossSpec":
        renamed = dict(payload)
        if "lambda" in renamed:
            renamed["asymmetry_weight"] = renamed.pop("lambda")
        if "beta" in renamed:
            renamed["monotonicity_weight"] = renamed.pop("beta")
        return dataclass_from_dict(cls, renamed)


def bayesian_loss(y, mu, s, mask):
    """Masked mean of (2/3) exp(-s) (y - mu)^2 + (1/3) s."""
    y, mask = _target_and_mask(y, mask)
    mu_cols = _columns(mu, mask.shape[1], "mu")
    s_cols = _columns(s, mask.shape[1], "s")
    count = _valid_count(mask)
    total = 0.0
    for j in range(mask.shape[1]):
        residual = y[:, j] - mu_cols[j]
        term = _SQERR_WEIGHT * ad.exp(-s_cols[j]) * (residual * residual) \
            + _LOGVAR_WEIGHT * s_cols[j]
        total = total + ad.sum_where(term, mask[:, j])
    return total / count


def monotonicity_penalty(mu, mask=None):
    """Ramp on decreases between consecutive predicted means.

    Returns (values, mean): `values` has one column per consecutive pair
    (zero where either side is masked out), `mean` averages over the
    valid pairs. A single-step horizon has no pairs and mean 0.
    """
    mu = _to_matrix(mu, "mu")
    if mask is None:
        mask = np.ones(mu.shape, dtype=bool)
    mask = as_bool_mask(mask, "mask", mu.shape)
    drops = np.maximum(mu[:, :-1] - mu[:, 1:], 0.0)
    pair_mask = mask[:, :-1] & mask[:, 1:]
    values = np.where(pair_mask, drops, 0.0)
    n_pairs = int(pair_mask.sum())
    mean = float(values[pair_mask].sum() / n_pairs) if n_pairs else 0.0
    return values, mean


def asymmetry_penalty(y, mu, mask=None, scale: bool = False):
    """Ramp on under-prediction, optionally weighted by ln(2 + target).

    Returns (values, mean): per-step matrix (zero at masked steps) and
    the average over valid steps.
    """
    y = as_step_matrix(y, "y")
    mu = _to_matrix(mu, "mu")
    if mask is None:
        mask = np.ones(y.shape, dtype=bool)
    mask = as_bool_mask(mask, "mask", y.shape)
    if y.shape != mu.shape:
        raise ValueError(f"y and mu must align, got {y.shape} vs {mu.shape}")
    under = np.maximum(y - mu, 0.0)
    if scale:
        _check_scalable(y, mask)
        under = under * np.log(2.0 + np.maximum(y, -1.0))
    values = np.where(mask, under, 0.0)
    count = int(mask.sum())
    if count == 0:
        raise ValueError("asymmetry penalty undefined with no valid steps")
    mean = float(values[mask].sum() / count)
    return values, mean


def total_loss(y, mu, s, mask, spec: LossSpec, denorm: tuple[float, float] | None = None):
    """Combined training loss under the configured integration mode.

    Ramp magnitudes are evaluated in the space of `y` and `mu` (the
    training space), keeping the constraint weights comparable to the
    squared-error term regardless of how the data was standardized. With
    `denorm` = (mean, std) of the length channel, only the ln(2 + y)
    asymmetry weighting is computed on the de-normalized millimetre
    targets, where it is physically meaningful. Zero constraint weights
    reduce both modes to `bayesian_loss` exactly.
    """
    if not spec.constrained:
        return bayesian_loss(y, mu, s, mask)
    y, mask = _target_and_mask(y, mask)
    k = mask.shape[1]
    mu_cols = _columns(mu, k, "mu")
    s_cols = _columns(s, k, "s")
    count = _valid_count(mask)

    lam = spec.asymmetry_weight
    beta = spec.monotonicity_weight
    if spec.scale:
        y_log = y if denorm is None else y * denorm[1] + denorm[0]
        _check_scalable(y_log, mask)
        asym_weights = np.log(2.0 + np.maximum(y_log, -1.0))
    else:
        asym_weights = None

    pair_mask = mask[:, :-1] & mask[:, 1:]
    total = 0.0
    for j in range(k):
        penalty = 0.0
        if lam > 0:
            under = ad.relu(y[:, j] - mu_cols[j])
            if asym_weights is not None:
                under = under * asym_weights[:, j]
            penalty = penalty + lam * under
        if beta > 0 and j >= 1:
            drop = ad.relu(mu_cols[j - 1] - mu_cols[j])
            # a pair bordering a masked step contributes nothing
            drop = drop * pair_mask[:, j - 1]
            penalty = penalty + beta * drop

        if spec.mode == MODE_SUM:
            residual = y[:, j] - mu_cols[j]
            term = _SQERR_WEIGHT * ad.exp(-s_cols[j]) * (residual * residual) \
                + _LOGVAR_WEIGHT * s_cols[j] + penalty
        else:
            residual = y[:, j] - mu_cols[j]
            bracket = residual * residual + penalty
            term = _SQERR_WEIGHT * ad.exp(-s_cols[j]) * bracket + _LOGVAR_WEIGHT * s_cols[j]
        total = total + ad.sum_where(term, mask[:, j])
    return total / count


def _target_and_mask(y, mask):
    y = as_step_matrix(y, "y")
    if mask is None:
        mask = np.ones(y.shape, dtype=bool)
    else:
        mask = np.asarray(mask, dtype=bool)
        if mask.ndim == 1:
            mask = mask[np.newaxis, :]
    if mask.shape != y.shape:
        raise ValueError(f"mask shape {mask.shape} must match targets {y.shape}")
    return y, mask


def _valid_count(mask) -> int:
    count = int(mask.sum())
    if count == 0:
        raise ValueError("loss undefined: no valid steps in mask")
    return count


def _columns(x, k: int, name: str) -> list:
    if isinstance(x, (list, tuple)):
        if len(x) != k:
            raise ValueError(f"{name} has {len(x)} step columns, expected {k}")
        return list(x)
    arr = as_step_matrix(x, name)
    if arr.shape[1] != k:
        raise ValueError(f"{name} has {arr.shape[1]} steps, expected {k}")
    return [arr[:, j] for j in range(k)]


def _to_matrix(x, name: str) -> np.ndarray:
    """Numeric (windows, steps) matrix from arrays, tensors or column lists."""
    if isinstance(x, (list, tuple)) and x and isinstance(x[0], (ad.Tensor, np.ndarray)):
        cols = [np.atleast_1d(ad.value_of(c)) for c in x]
        return np.stack(cols, axis=1)
    return as_step_matrix(ad.value_of(x), name)


def _check_scalable(y: np.ndarray, mask: np.ndarray) -> None:
    valid = y[mask]
    if valid.size and valid.min() < -1.0:
        raise ValueError("scale=True requires targets >= -1 (ln(2 + y) weighting)")
