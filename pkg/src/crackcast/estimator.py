"""Scikit-learn style facade over the forecaster.

`CrackForecaster` owns the full train-time recipe: it fits the channel
scaler on the training windows, trains the recurrent model in normalized
space (constraint penalties are still evaluated in millimetres through
the scaler's inverse), and predicts back in millimetres. It follows the
estimator protocol (`get_params`/`set_params`/`fit` returning self) so
it composes with sklearn tooling.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from . import autodiff as ad
from .losses import LossSpec
from .metrics import DEFAULT_UNDERPRED_THRESHOLD_MM, EvalReport, evaluate_predictions
from .network import ModelConfig, forward_batch
from .scaling import WindowScaler, _as_batch
from .training import train
from .uncertainty import DEFAULT_LEVEL, DEFAULT_MC_SAMPLES, ForecastDistribution, mc_forecast
from .windows import WindowBatch


class CrackForecaster(BaseEstimator):
    """Multi-horizon crack-length forecaster with optional constraints.

    Parameters mirror the training recipe: network shape, dropout rate,
    the constraint weights with their integration mode, and the
    optimization settings. `random_state` seeds initialization, batch
    shuffling and dropout, making `fit` fully reproducible.
    """

    def __init__(
        self,
        hidden_size: int = 64,
        cell_type: str = "gru",
        dropout_rate: float = 0.10,
        asymmetry_weight: float = 0.0,
        monotonicity_weight: float = 0.0,
        scale: bool = False,
        mode: str = "sum",
        epochs: int = 10,
        batch_size: int = 128,
        learning_rate: float = 1e-3,
        random_state: int = 0,
    ):
        self.hidden_size = hidden_size
        self.cell_type = cell_type
        self.dropout_rate = dropout_rate
        self.asymmetry_weight = asymmetry_weight
        self.monotonicity_weight = monotonicity_weight
        self.scale = scale
        self.mode = mode
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.random_state = random_state

    # -- estimator protocol -------------------------------------------------

    def fit(self, X, y=None, validation=None):
        """Fit on training windows (millimetre space); returns self.

        `validation` windows, when given, drive best-epoch selection and
        the validation columns of the history.
        """
        batch = _as_batch(X)
        self.config_ = ModelConfig(
            feature_dim=batch.feature_dim,
            hidden_size=self.hidden_size,
            cell_type=self.cell_type,
            dropout_rate=self.dropout_rate,
            past_steps=batch.past_steps,
            horizon=batch.horizon,
        )
        self.scaler_ = WindowScaler().fit(batch)
        train_norm = self.scaler_.transform(batch)
        val_norm = None
        if validation is not None:
            val_batch = _as_batch(validation)
            if len(val_batch) > 0:
                val_norm = self.scaler_.transform(val_batch)
        self.params_, self.history_ = train(
            train_norm,
            val_norm,
            self.config_,
            self.loss_spec,
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            seed=self.random_state,
            denorm=self.scaler_.length_affine(),
        )
        return self

    def predict(self, X) -> np.ndarray:
        """Deterministic (dropout-off) mean predictions in millimetres."""
        batch = self._prepared(X)
        mu_cols, _ = forward_batch(self.params_, self.config_, batch)
        mu = np.stack([ad.value_of(c) for c in mu_cols], axis=1)
        return self.scaler_.inverse_transform_lengths(mu)

    def predict_dist(
        self,
        X,
        n_samples: int = DEFAULT_MC_SAMPLES,
        seed: int = 0,
        level: float = DEFAULT_LEVEL,
    ) -> ForecastDistribution:
        """Monte Carlo dropout forecast with uncertainty, in millimetres."""
        return mc_forecast(
            self.params_,
            self.config_,
            self._prepared(X),
            n_samples=n_samples,
            seed=seed,
            scaler=self.scaler_,
            level=level,
        )

    def evaluate(
        self, X, threshold_mm: float = DEFAULT_UNDERPRED_THRESHOLD_MM
    ) -> EvalReport:
        """Metric bundle of deterministic predictions against the targets."""
        batch = _as_batch(X)
        predictions = self.predict(batch)
        return evaluate_predictions(predictions, batch.targets, batch.mask, threshold_mm)

    # -- helpers -------------------------------------------------------

    @property
    def loss_spec(self) -> LossSpec:
        return LossSpec(
            asymmetry_weight=self.asymmetry_weight,
            monotonicity_weight=self.monotonicity_weight,
            scale=self.scale,
            mode=self.mode,
        )

    @property
    def is_fitted(self) -> bool:
        return hasattr(self, "params_")

    def _prepared(self, X) -> WindowBatch:
        if not self.is_fitted:
            raise NotFittedError("CrackForecaster must be fitted before predicting")
        batch = _as_batch(X)
        return self.scaler_.transform(batch)
