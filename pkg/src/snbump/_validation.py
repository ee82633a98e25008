"""Small input validation helpers shared by the public operations."""
from __future__ import annotations

import math

import numpy as np

from .exceptions import ConfigError


def check_positive(value, name: str) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be a number, got {value!r}") from exc
    if not math.isfinite(v) or v <= 0.0:
        raise ConfigError(f"{name} must be positive and finite, got {value!r}")
    return v


def check_int(value, name: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or int(value) != value:
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    v = int(value)
    if minimum is not None and v < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {v}")
    return v


def check_interval(value, name: str) -> tuple[float, float]:
    try:
        a, b = (float(x) for x in value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be a pair of numbers, got {value!r}") from exc
    if not (math.isfinite(a) and math.isfinite(b)) or a >= b:
        raise ConfigError(f"{name} must satisfy lower < upper, got {value!r}")
    return a, b


def check_field(values, shape, name: str = "field") -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.shape != tuple(shape):
        raise ValueError(f"{name} has shape {arr.shape}, expected {tuple(shape)}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr
