"""Multi-horizon recurrent encoder-decoder with a heteroscedastic head.

Architecture
------------
An encoder cell consumes the observed past, one step at a time, reading
the vector ``[features_j, length_j]``. Its final hidden state seeds a
decoder cell that unrolls over the prediction horizon, reading
``[future_features_j, previous_predicted_mean]`` (the first decoder step
reads the last observed length). Each decoder state passes through two
linear heads: one for the predicted mean and one for the predicted
log-variance, the latter clamped to [-10, 10] for numerical stability.
The decoder feeds back its own predicted mean, so training matches
inference-time usage.

Cell equations (all weights are float64; x is the step input, h the
previous hidden state):

GRU:
    z = sigmoid(x W_zx + h W_zh + b_z)          update gate
    r = sigmoid(x W_rx + h W_rh + b_r)          reset gate
    c = tanh(x W_cx + (r * h) W_ch + b_c)       candidate state
    h' = (1 - z) * h + z * c

Simple RNN:
    h' = tanh(x W_x + h W_h + b)

Parameter counts follow directly: a GRU cell with input width D holds
3*(D*H + H*H + H) values, a simple RNN cell D*H + H*H + H, and each head
H + 1.

Dropout (inverted, keep-scale 1/(1 - rate)) is applied to cell inputs
and to the head input, never to the hidden-to-hidden recurrence. Masks
are drawn freshly at each application site from a generator seeded per
forward pass, so a fixed seed reproduces the pass exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .losses import LossSpec, total_loss
from .windows import WindowBatch, WindowSample

CELL_GRU = "gru"
CELL_SIMPLE_RNN = "rnn"

LOGVAR_MIN = -10.0
LOGVAR_MAX = 10.0

_GRU_GATES = ("update", "reset", "cand")


class NumericalError(RuntimeError):
    """Raised when a loss evaluates to a non-finite value."""

    def __init__(self, message: str, batch_index: int | None = None):
        super().__init__(message)
        self.batch_index = batch_index


@dataclass(frozen=True)
class ModelConfig:
    feature_dim: int
    hidden_size: int = 64
    cell_type: str = CELL_GRU
    dropout_rate: float = 0.10
    past_steps: int = 5
    horizon: int = 4

    def __post_init__(self):
        if self.hidden_size < 1:
            raise ValueError("hidden_size must be >= 1")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must lie in [0, 1)")
        if self.cell_type not in (CELL_GRU, CELL_SIMPLE_RNN):
            raise ValueError(f"unknown cell_type {self.cell_type!r}")
        if self.past_steps < 1 or self.horizon < 1:
            raise ValueError("past_steps and horizon must be >= 1")
        if self.feature_dim < 0:
            raise ValueError("feature_dim must be >= 0")

    @property
    def input_dim(self) -> int:
        # features plus one length channel, same for encoder and decoder
        return self.feature_dim + 1

    def to_dict(self) -> dict:
        return {
            "feature_dim": self.feature_dim,
            "hidden_size": self.hidden_size,
            "cell_type": self.cell_type,
            "dropout_rate": self.dropout_rate,
            "past_steps": self.past_steps,
            "horizon": self.horizon,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ModelConfig":
        from .validation import dataclass_from_dict

        return dataclass_from_dict(cls, payload)


@dataclass
class StepOutput:
    """One decoder step: predicted mean and clamped log-variance."""

    mu: float
    s: float


class ModelParams:
    """Named float64 parameter arrays in a fixed canonical order."""

    def __init__(self, arrays: dict[str, np.ndarray]):
        self.arrays = {name: np.asarray(a, dtype=np.float64) for name, a in arrays.items()}

    def __getitem__(self, name: str) -> np.ndarray:
        return self.arrays[name]

    def names(self) -> list[str]:
        return list(self.arrays)

    def copy(self) -> "ModelParams":
        return ModelParams({k: v.copy() for k, v in self.arrays.items()})

    def total_count(self) -> int:
        return sum(a.size for a in self.arrays.values())

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.arrays.values())


def parameter_shapes(config: ModelConfig) -> dict[str, tuple]:
    """Canonical parameter layout; also fixes the initialization order."""
    d, h = config.input_dim, config.hidden_size
    shapes: dict[str, tuple] = {}
    for cell in ("encoder", "decoder"):
        if config.cell_type == CELL_GRU:
            for gate in _GRU_GATES:
                shapes[f"{cell}.{gate}_x"] = (d, h)
                shapes[f"{cell}.{gate}_h"] = (h, h)
                shapes[f"{cell}.{gate}_b"] = (h,)
        else:
            shapes[f"{cell}.lin_x"] = (d, h)
            shapes[f"{cell}.lin_h"] = (h, h)
            shapes[f"{cell}.lin_b"] = (h,)
    shapes["head_mean.w"] = (h, 1)
    shapes["head_mean.b"] = (1,)
    shapes["head_logvar.w"] = (h, 1)
    shapes["head_logvar.b"] = (1,)
    return shapes


def parameter_count(config: ModelConfig) -> int:
    return sum(int(np.prod(s)) for s in parameter_shapes(config).values())


def init_params(config: ModelConfig, seed: int) -> ModelParams:
    """Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights, zero biases."""
    rng = np.random.default_rng(seed)
    arrays = {}
    for name, shape in parameter_shapes(config).items():
        if name.endswith(("_b", ".b")):
            arrays[name] = np.zeros(shape)
        else:
            bound = 1.0 / np.sqrt(shape[0])
            arrays[name] = rng.uniform(-bound, bound, size=shape)
    return ModelParams(arrays)


def _cell_step(p, cell: str, cell_type: str, x, h):
    if cell_type == CELL_GRU:
        z = ad.sigmoid(x @ p[f"{cell}.update_x"] + h @ p[f"{cell}.update_h"] + p[f"{cell}.update_b"])
        r = ad.sigmoid(x @ p[f"{cell}.reset_x"] + h @ p[f"{cell}.reset_h"] + p[f"{cell}.reset_b"])
        c = ad.tanh(x @ p[f"{cell}.cand_x"] + (r * h) @ p[f"{cell}.cand_h"] + p[f"{cell}.cand_b"])
        return (1.0 - z) * h + z * c
    return ad.tanh(x @ p[f"{cell}.lin_x"] + h @ p[f"{cell}.lin_h"] + p[f"{cell}.lin_b"])


class _Dropout:
    """Fresh keep-masks per application site, in a fixed draw order."""

    def __init__(self, rate: float, seed: int | None):
        self.active = seed is not None and rate > 0.0
        self.rate = rate
        self._rng = np.random.default_rng(seed) if seed is not None else None

    def apply(self, x, width: int, rows: int):
        if self._rng is None:
            return x
        # draw even at rate 0 so the stream is independent of the rate
        mask = (self._rng.random((rows, width)) >= self.rate) / (1.0 - self.rate)
        if not self.active:
            return x
        return x * mask


def _check_batch(config: ModelConfig, batch: WindowBatch) -> None:
    if batch.past_steps != config.past_steps:
        raise ValueError(f"batch has {batch.past_steps} past steps, config expects {config.past_steps}")
    if batch.horizon != config.horizon:
        raise ValueError(f"batch horizon {batch.horizon} != config horizon {config.horizon}")
    if batch.feature_dim != config.feature_dim:
        raise ValueError(f"batch feature dim {batch.feature_dim} != config {config.feature_dim}")


def forward_batch(params, config: ModelConfig, batch: WindowBatch, dropout_seed: int | None = None):
    """Unroll the model over a batch; returns per-step (mu, s) columns.

    `params` maps names to ndarrays (fast inference) or autodiff tensors
    (training). With `dropout_seed=None` the pass is deterministic; an
    integer seed samples dropout masks reproducibly.
    """
    _check_batch(config, batch)
    arrays = params.arrays if isinstance(params, ModelParams) else params
    n = len(batch)
    dropout = _Dropout(config.dropout_rate, dropout_seed)

    h = np.zeros((n, config.hidden_size))
    for step in range(config.past_steps):
        x = np.concatenate(
            [batch.past_features[:, step, :], batch.past_lengths[:, step : step + 1]], axis=1
        )
        x = dropout.apply(x, config.input_dim, n)
        h = _cell_step(arrays, "encoder", config.cell_type, x, h)

    prev = batch.past_lengths[:, -1:]
    mu_cols, s_cols = [], []
    for j in range(config.horizon):
        x = ad.concat([batch.future_features[:, j, :], prev], axis=1)
        x = dropout.apply(x, config.input_dim, n)
        h = _cell_step(arrays, "decoder", config.cell_type, x, h)
        head_in = dropout.apply(h, config.hidden_size, n)
        # the mean head predicts the increment over the previous length,
        # so an untrained model starts out close to persistence
        mu = prev + (head_in @ arrays["head_mean.w"] + arrays["head_mean.b"])
        s = ad.clamp(
            head_in @ arrays["head_logvar.w"] + arrays["head_logvar.b"], LOGVAR_MIN, LOGVAR_MAX
        )
        mu_cols.append(mu.reshape(n))
        s_cols.append(s.reshape(n))
        prev = mu
    return mu_cols, s_cols


def forward(params: ModelParams, config: ModelConfig, window: WindowSample,
            dropout_seed: int | None = None) -> list[StepOutput]:
    """Single-window forward pass."""
    batch = WindowBatch.from_samples([window])
    mu_cols, s_cols = forward_batch(params, config, batch, dropout_seed)
    return [
        StepOutput(mu=float(ad.value_of(m)[0]), s=float(ad.value_of(s)[0]))
        for m, s in zip(mu_cols, s_cols)
    ]


def compute_gradients(
    params: ModelParams,
    config: ModelConfig,
    batch: WindowBatch,
    loss_spec: LossSpec,
    dropout_seed: int | None = None,
    denorm: tuple[float, float] | None = None,
):
    """Loss value and gradients via reverse accumulation through the unroll.

    Padded steps contribute exactly zero. Raises NumericalError with the
    offending batch index if the loss is non-finite.
    """
    if len(batch) == 0:
        raise ValueError("batch must contain at least one window")
    tensors = {name: ad.Tensor(a, requires_grad=True) for name, a in params.arrays.items()}
    mu_cols, s_cols = forward_batch(tensors, config, batch, dropout_seed)
    loss = total_loss(batch.targets, mu_cols, s_cols, batch.mask, loss_spec, denorm)
    value = loss.item()
    if not np.isfinite(value):
        raise NumericalError(
            f"non-finite loss {value}", batch_index=_offending_index(mu_cols, s_cols)
        )
    loss.backward()
    grads = {
        name: (t.grad if t.grad is not None else np.zeros_like(t.data))
        for name, t in tensors.items()
    }
    return value, grads


def _offending_index(mu_cols, s_cols) -> int | None:
    stacked = np.stack(
        [ad.value_of(c) for c in mu_cols] + [ad.value_of(c) for c in s_cols], axis=1
    )
    bad = ~np.isfinite(stacked).all(axis=1)
    return int(np.argmax(bad)) if bad.any() else None
