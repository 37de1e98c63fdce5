"""Standard scaling of windowed series, channel by channel.

The length channel (past lengths plus observed targets) and each
exogenous feature channel get their own mean/std, fitted on training
windows only. Padded future steps are excluded from fitting and are left
at exactly zero by `transform`, so masked entries stay inert end to end.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .windows import WindowBatch, WindowSample

STD_FLOOR = 1e-8


class WindowScaler(BaseEstimator, TransformerMixin):
    """Zero-mean unit-variance scaler over window batches.

    Uses population standard deviations; channels with (near-)zero
    variance scale by 1 so constant channels map to 0 rather than blowing
    up.
    """

    def __init__(self):
        self.length_mean_ = None
        self.length_std_ = None
        self.feature_mean_ = None
        self.feature_std_ = None

    @property
    def is_fitted(self) -> bool:
        return self.length_mean_ is not None

    def fit(self, X, y=None):
        batch = _as_batch(X)
        lengths = np.concatenate(
            [batch.past_lengths.ravel(), batch.targets[batch.mask].ravel()]
        )
        self.length_mean_ = float(lengths.mean())
        self.length_std_ = _guarded_std(lengths)

        m = batch.feature_dim
        pooled = np.concatenate(
            [
                batch.past_features.reshape(-1, m),
                batch.future_features[batch.mask].reshape(-1, m),
            ]
        )
        self.feature_mean_ = pooled.mean(axis=0)
        self.feature_std_ = np.array([_guarded_std(pooled[:, j]) for j in range(m)])
        return self

    def transform(self, X) -> WindowBatch:
        self._check_fitted()
        batch = _as_batch(X)
        targets = np.where(
            batch.mask, (batch.targets - self.length_mean_) / self.length_std_, 0.0
        )
        future_features = np.where(
            batch.mask[:, :, np.newaxis],
            (batch.future_features - self.feature_mean_) / self.feature_std_,
            0.0,
        )
        return WindowBatch(
            defect_ids=batch.defect_ids,
            past_lengths=(batch.past_lengths - self.length_mean_) / self.length_std_,
            past_features=(batch.past_features - self.feature_mean_) / self.feature_std_,
            future_features=future_features,
            targets=targets,
            mask=batch.mask.copy(),
        )

    def inverse_transform_lengths(self, values):
        """Map normalized length-channel values back to millimetres."""
        self._check_fitted()
        return np.asarray(values, dtype=np.float64) * self.length_std_ + self.length_mean_

    def transform_lengths(self, values_mm):
        self._check_fitted()
        return (np.asarray(values_mm, dtype=np.float64) - self.length_mean_) / self.length_std_

    def length_affine(self) -> tuple[float, float]:
        """(mean, std) of the length channel, for in-graph denormalization."""
        self._check_fitted()
        return self.length_mean_, self.length_std_

    def to_dict(self) -> dict:
        self._check_fitted()
        return {
            "length_mean": self.length_mean_,
            "length_std": self.length_std_,
            "feature_mean": list(self.feature_mean_),
            "feature_std": list(self.feature_std_),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "WindowScaler":
        scaler = cls()
        scaler.length_mean_ = float(payload["length_mean"])
        scaler.length_std_ = float(payload["length_std"])
        scaler.feature_mean_ = np.asarray(payload["feature_mean"], dtype=np.float64)
        scaler.feature_std_ = np.asarray(payload["feature_std"], dtype=np.float64)
        return scaler

    def _check_fitted(self):
        if not self.is_fitted:
            raise NotFittedError("WindowScaler must be fitted before use")


def _guarded_std(values: np.ndarray) -> float:
    std = float(values.std())
    return std if std >= STD_FLOOR else 1.0


def _as_batch(X) -> WindowBatch:
    if isinstance(X, WindowBatch):
        return X
    if isinstance(X, (list, tuple)) and X and isinstance(X[0], WindowSample):
        return WindowBatch.from_samples(list(X))
    raise TypeError("expected a WindowBatch or a non-empty list of WindowSample")
