"""JSON checkpoints that round-trip trained models bit-exactly.

Parameter arrays are stored as decimal strings (shortest round-trip
repr of each 64-bit value), so saving and loading reproduces the exact
bit pattern of every weight.
"""

from __future__ import annotations

import json

import numpy as np

from .estimator import CrackForecaster
from .network import ModelParams
from .scaling import WindowScaler

FORMAT_NAME = "crackcast-checkpoint"
FORMAT_VERSION = 1


def _encode_params(params: ModelParams) -> dict:
    return {
        name: {"shape": list(a.shape), "values": [repr(float(v)) for v in a.ravel()]}
        for name, a in params.arrays.items()
    }


def _decode_params(payload: dict) -> ModelParams:
    arrays = {}
    for name, entry in payload.items():
        values = np.array([float(v) for v in entry["values"]], dtype=np.float64)
        arrays[name] = values.reshape(entry["shape"])
    return ModelParams(arrays)


def save_checkpoint(path, forecaster: CrackForecaster, pipeline_settings: dict | None = None) -> None:
    if not forecaster.is_fitted:
        raise ValueError("cannot checkpoint an unfitted forecaster")
    payload = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "config": {
            "model": forecaster.config_.to_dict(),
            "loss": forecaster.loss_spec.to_dict(),
            "training": {
                "epochs": forecaster.epochs,
                "batch_size": forecaster.batch_size,
                "learning_rate": forecaster.learning_rate,
            },
            "pipeline": pipeline_settings or {},
        },
        "scaler": forecaster.scaler_.to_dict(),
        "params": _encode_params(forecaster.params_),
        "history": forecaster.history_,
        "seed": forecaster.random_state,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)


def load_checkpoint(path) -> tuple[CrackForecaster, dict]:
    """Returns the fitted forecaster plus the stored pipeline settings."""
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != FORMAT_NAME:
        raise ValueError(f"{path}: not a {FORMAT_NAME} file")
    if payload.get("version") != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {payload.get('version')}")

    from .losses import LossSpec
    from .network import ModelConfig

    model_config = ModelConfig.from_dict(payload["config"]["model"])
    loss_spec = LossSpec.from_dict(payload["config"]["loss"])
    training = payload["config"]["training"]

    forecaster = CrackForecaster(
        hidden_size=model_config.hidden_size,
        cell_type=model_config.cell_type,
        dropout_rate=model_config.dropout_rate,
        asymmetry_weight=loss_spec.asymmetry_weight,
        monotonicity_weight=loss_spec.monotonicity_weight,
        scale=loss_spec.scale,
        mode=loss_spec.mode,
        epochs=training["epochs"],
        batch_size=training["batch_size"],
        learning_rate=training["learning_rate"],
        random_state=payload["seed"],
    )
    forecaster.config_ = model_config
    forecaster.scaler_ = WindowScaler.from_dict(payload["scaler"])
    forecaster.params_ = _decode_params(payload["params"])
    forecaster.history_ = payload["history"]
    return forecaster, payload["config"]["pipeline"]
