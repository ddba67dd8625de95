"""Input validation helpers shared by the public functions and estimators."""

from __future__ import annotations

import numpy as np
from sklearn.utils import check_array

from .exceptions import DimensionError


def check_sample(X, *, min_rows: int = 1, name: str = "X") -> np.ndarray:
    """Return ``X`` as a finite float64 matrix with observations in rows.

    A 1-d input is read as a single variable (one column).
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    X = check_array(X, dtype=np.float64, ensure_all_finite=True, ensure_min_samples=1,
                    input_name=name)
    if X.shape[0] < min_rows:
        raise DimensionError(f"{name} needs at least {min_rows} rows, got {X.shape[0]}")
    return X


def check_vector(v, n: int | None = None, *, name: str = "vector") -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim == 0:
        v = v[None]
    if v.ndim != 1:
        raise DimensionError(f"{name} must be one-dimensional, got shape {v.shape}")
    if n is not None and v.shape[0] != n:
        raise DimensionError(f"{name} must have length {n}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


def check_square(M, n: int | None = None, *, name: str = "matrix") -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim == 0:
        M = M.reshape(1, 1)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {M.shape}")
    if n is not None and M.shape[0] != n:
        raise DimensionError(f"{name} must be {n}x{n}, got {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} contains non-finite entries")
    return M


def check_symmetric(V, *, tol: float = 1e-12, name: str = "V") -> np.ndarray:
    """Validate symmetry to a relative tolerance and return the symmetrized matrix."""
    V = check_square(V, name=name)
    scale = max(1.0, float(np.max(np.abs(V))))
    if np.max(np.abs(V - V.T)) > tol * scale:
        raise ValueError(f"{name} is not symmetric")
    return 0.5 * (V + V.T)
