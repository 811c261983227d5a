"""Input validation helpers shared across the package."""

from __future__ import annotations

import numpy as np


class FormatError(ValueError):
    """Malformed input file; the message carries a line number where possible."""


class DataError(ValueError):
    """Dataset content violates the label/text contract."""


def check_positive_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    if value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_unit_interval(value, name: str) -> float:
    value = float(value)
    if not 0.0 <= value < 1.0:
        raise ValueError(f"{name} must lie in [0, 1), got {value!r}")
    return value


def check_nonnegative(value, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value < 0.0:
        raise ValueError(f"{name} must be a finite nonnegative number, got {value!r}")
    return value


def as_float_matrix(arr, name: str, *, cols: int | None = None, min_rows: int = 1) -> np.ndarray:
    """Coerce to a 2-d float64 array and reject wrong widths or non-finite entries."""
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-d array, got shape {arr.shape}")
    if arr.shape[0] < min_rows:
        raise ValueError(f"{name} must have at least {min_rows} row(s), got {arr.shape[0]}")
    if cols is not None and arr.shape[1] != cols:
        raise ValueError(f"{name} must have {cols} columns, got {arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def as_float_vector(arr, name: str, *, length: int | None = None) -> np.ndarray:
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a 1-d array, got shape {arr.shape}")
    if length is not None and arr.shape[0] != length:
        raise ValueError(f"{name} must have length {length}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_distribution(arr, name: str, *, length: int | None = None, tol: float = 1e-9) -> np.ndarray:
    """Validate a probability vector (nonnegative, sums to one)."""
    arr = as_float_vector(arr, name, length=length)
    if np.any(arr < 0.0):
        raise ValueError(f"{name} has negative entries")
    if abs(float(arr.sum()) - 1.0) > tol:
        raise ValueError(f"{name} must sum to 1, got {float(arr.sum())!r}")
    return arr
