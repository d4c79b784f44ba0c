"""Input checks shared by the public functions."""

import numpy as np


def as_ensemble(data, name="data"):
    """Return ``data`` as a finite float64 array of shape (n, d)."""
    arr = np.asarray(getattr(data, "realizations", data), dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D (n, d), got shape {arr.shape}")
    if arr.shape[0] < 1:
        raise ValueError(f"{name} is empty")
    if arr.shape[1] < 1:
        raise ValueError(f"{name} has zero dimension")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def as_vector(x, d=None, name="vector"):
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    if d is not None and arr.shape[0] != d:
        raise ValueError(f"{name} has length {arr.shape[0]}, expected {d}")
    if arr.shape[0] < 1:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_dimension(m, d, name="m"):
    """Model dimensions live in [1, d - 1]; the noise estimate divides by d - m."""
    if isinstance(m, bool) or int(m) != m:
        raise ValueError(f"{name} must be an integer, got {m!r}")
    m = int(m)
    if not 1 <= m <= d - 1:
        raise ValueError(f"{name}={m} outside admissible range [1, {d - 1}]")
    return m
