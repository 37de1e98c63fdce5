"""Adam optimizer and the seeded mini-batch training loop."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .losses import LossSpec, bayesian_loss, total_loss
from .network import ModelConfig, ModelParams, compute_gradients, forward_batch, init_params
from .windows import WindowBatch

_EVAL_CHUNK = 4096


@dataclass
class AdamState:
    step: int
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]

    @classmethod
    def for_params(cls, params: ModelParams) -> "AdamState":
        return cls(
            step=0,
            m={k: np.zeros_like(a) for k, a in params.arrays.items()},
            v={k: np.zeros_like(a) for k, a in params.arrays.items()},
        )


def adam_step(
    params: ModelParams,
    gradients: dict[str, np.ndarray],
    state: AdamState,
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> tuple[ModelParams, AdamState]:
    """One bias-corrected Adam update; returns fresh params and state."""
    t = state.step + 1
    new_arrays, new_m, new_v = {}, {}, {}
    for name, value in params.arrays.items():
        g = gradients[name]
        m = beta1 * state.m[name] + (1.0 - beta1) * g
        v = beta2 * state.v[name] + (1.0 - beta2) * (g * g)
        m_hat = m / (1.0 - beta1**t)
        v_hat = v / (1.0 - beta2**t)
        new_arrays[name] = value - lr * m_hat / (np.sqrt(v_hat) + eps)
        new_m[name] = m
        new_v[name] = v
    return ModelParams(new_arrays), AdamState(step=t, m=new_m, v=new_v)


def evaluate_loss(
    params: ModelParams,
    config: ModelConfig,
    batch: WindowBatch,
    loss_spec: LossSpec,
    denorm: tuple[float, float] | None = None,
) -> tuple[float, float]:
    """Deterministic (dropout-off) total and plain heteroscedastic loss."""
    total_sum = 0.0
    bayes_sum = 0.0
    count = 0
    unconstrained = LossSpec(mode=loss_spec.mode)
    for lo in range(0, len(batch), _EVAL_CHUNK):
        chunk = batch.subset(np.arange(lo, min(lo + _EVAL_CHUNK, len(batch))))
        mu, s = forward_batch(params, config, chunk, dropout_seed=None)
        n_valid = int(chunk.mask.sum())
        total_sum += total_loss(chunk.targets, mu, s, chunk.mask, loss_spec, denorm) * n_valid
        bayes_sum += bayesian_loss(chunk.targets, mu, s, chunk.mask) * n_valid
        count += n_valid
    return total_sum / count, bayes_sum / count


def train(
    train_batch: WindowBatch,
    val_batch: WindowBatch | None,
    config: ModelConfig,
    loss_spec: LossSpec,
    epochs: int = 10,
    batch_size: int = 128,
    learning_rate: float = 1e-3,
    seed: int = 0,
    denorm: tuple[float, float] | None = None,
) -> tuple[ModelParams, list[dict]]:
    """Seeded training; returns best-validation params and an epoch history.

    Shuffling and dropout are driven by one generator seeded with `seed`,
    so identical inputs reproduce identical weights. History rows hold
    the mean training loss seen during the epoch plus dropout-off
    validation losses (row 0 describes the initial parameters).
    """
    if len(train_batch) == 0:
        raise ValueError("training split is empty")
    params = init_params(config, seed)
    if epochs == 0:
        return params, []

    state = AdamState.for_params(params)
    rng = np.random.default_rng(seed)
    history = [_history_row(0, None, params, config, train_batch, val_batch, loss_spec, denorm)]
    best_params = params.copy()
    best_val = history[0]["val_loss"]

    for epoch in range(1, epochs + 1):
        order = rng.permutation(len(train_batch))
        epoch_losses = []
        for lo in range(0, len(order), batch_size):
            minibatch = train_batch.subset(order[lo : lo + batch_size])
            dropout_seed = int(rng.integers(0, 2**63 - 1))
            loss, grads = compute_gradients(
                params, config, minibatch, loss_spec, dropout_seed, denorm
            )
            params, state = adam_step(params, grads, state, lr=learning_rate)
            epoch_losses.append(loss)
        row = _history_row(
            epoch, float(np.mean(epoch_losses)), params, config,
            train_batch, val_batch, loss_spec, denorm,
        )
        history.append(row)
        if row["val_loss"] is not None and (best_val is None or row["val_loss"] < best_val):
            best_val = row["val_loss"]
            best_params = params.copy()

    return (best_params if best_val is not None else params), history


def _history_row(epoch, train_loss, params, config, train_batch, val_batch, loss_spec, denorm):
    row = {"epoch": epoch, "train_loss": train_loss, "val_loss": None, "val_bayes_loss": None}
    if epoch == 0:
        row["train_loss"], _ = evaluate_loss(params, config, train_batch, loss_spec, denorm)
    if val_batch is not None and len(val_batch) > 0:
        row["val_loss"], row["val_bayes_loss"] = evaluate_loss(
            params, config, val_batch, loss_spec, denorm
        )
    return row
