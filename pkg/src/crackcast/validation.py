"""Input validation helpers shared across the public API."""

from __future__ import annotations

import dataclasses

import numpy as np


def dataclass_from_dict(cls, payload: dict):
    """Build a dataclass from a JSON-style dict, rejecting unknown keys.

    List-valued entries are coerced to tuples when the field default is a
    tuple, so range pairs round-trip through JSON.
    """
    if not isinstance(payload, dict):
        raise ValueError(f"{cls.__name__} config must be a JSON object")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(payload) - set(fields)
    if unknown:
        raise ValueError(f"unknown {cls.__name__} fields: {sorted(unknown)}")
    kwargs = {}
    for name, value in payload.items():
        default = fields[name].default
        if isinstance(default, tuple) and isinstance(value, list):
            value = tuple(value)
        kwargs[name] = value
    return cls(**kwargs)


def as_float_array(x, name: str, ndim: int | None = None) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def as_bool_mask(x, name: str, shape: tuple | None = None) -> np.ndarray:
    arr = np.asarray(x, dtype=bool)
    if shape is not None and arr.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
    return arr


def check_same_shape(**named_arrays) -> tuple:
    shapes = {name: np.shape(a) for name, a in named_arrays.items()}
    unique = set(shapes.values())
    if len(unique) != 1:
        raise ValueError(f"arrays must share one shape, got {shapes}")
    return unique.pop()


def as_step_matrix(x, name: str) -> np.ndarray:
    """Coerce per-step values to 2-D (windows, steps); 1-D means one window."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[np.newaxis, :]
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 1-D or 2-D, got shape {arr.shape}")
    return arr
