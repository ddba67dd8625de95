"""Sample moments: mean, covariance, co-skewness tensor, Mardia and Kollo skewness.

All moments use population (divide-by-m) normalization. Standardization uses
the symmetric inverse square root of the covariance matrix.
"""

from __future__ import annotations

import numpy as np

from ._validation import check_sample, check_square, check_vector
from .exceptions import DimensionError, SingularCovariance


def sample_mean_cov(X):
    """Population mean vector and covariance matrix of the rows of ``X``.

    Returns
    -------
    mu : ndarray of shape (n,)
    V : ndarray of shape (n, n)
    """
    X = check_sample(X)
    if X.shape[0] < 2:
        raise DimensionError("at least two observations are needed for a covariance")
    mu = X.mean(axis=0)
    D = X - mu
    V = D.T @ D / X.shape[0]
    return mu, 0.5 * (V + V.T)


def inverse_sqrt(V) -> np.ndarray:
    """Symmetric inverse square root ``V^{-1/2}``.

    Eigenvalues below ``1e-12 * trace(V) / n`` are treated as zero and raise
    :class:`SingularCovariance`.
    """
    V = check_square(V, name="V")
    vals, vecs = np.linalg.eigh(0.5 * (V + V.T))
    n = V.shape[0]
    floor = 1e-12 * max(np.trace(V), 0.0) / n
    if vals.min() <= floor or not np.isfinite(vals).all():
        raise SingularCovariance("covariance matrix is singular at tolerance")
    return (vecs / np.sqrt(vals)) @ vecs.T


def standardize(X) -> np.ndarray:
    """Rows of ``(X - 1 mu') V^{-1/2}`` using the sample's own mean and covariance."""
    X = check_sample(X)
    mu, V = sample_mean_cov(X)
    return (X - mu) @ inverse_sqrt(V)


def coskewness(X) -> np.ndarray:
    """Co-skewness tensor ``c[i, j, k] = E[Y*_i Y*_j Y*_k]`` of shape (n, n, n)."""
    Y = standardize(X)
    return np.einsum("ti,tj,tk->ijk", Y, Y, Y, optimize=True) / Y.shape[0]


def mardia_skewness(X) -> float:
    """Mardia's multivariate skewness, the sum of squared co-skewness entries."""
    c = coskewness(X)
    return float(np.sum(c * c))


def kollo_skewness(X) -> np.ndarray:
    """Kollo skewness vector, the row sums ``sum_{j,k} c[i, j, k]``.

    Evaluated without building the tensor: ``tau = m^{-1} sum_t (y_t 1)^2 y_t'``.
    """
    Y = standardize(X)
    row_sums = Y.sum(axis=1)
    return (row_sums**2) @ Y / Y.shape[0]


def rotate_skewness(tau, Omega) -> np.ndarray:
    """Rotated Kollo skewness ``p = n^{-1} Omega' tau``."""
    tau = check_vector(tau, name="tau")
    Omega = check_square(Omega, tau.shape[0], name="Omega")
    return Omega.T @ tau / tau.shape[0]


def marginal_kurtosis(X) -> np.ndarray:
    """Non-excess kurtosis of each column (population moments)."""
    X = check_sample(X, min_rows=2)
    D = X - X.mean(axis=0)
    var = np.mean(D**2, axis=0)
    return np.mean(D**4, axis=0) / var**2


def lmatrix_kollo(M) -> np.ndarray:
    """Kollo skewness of a scaled L matrix ``M`` read directly from its rows.

    ``tau = m^{-1} sum_i (r_i 1)^2 r_i'``; valid because ``M`` already has zero
    column means and identity covariance.
    """
    M = np.asarray(M, dtype=float)
    return (M.sum(axis=1) ** 2) @ M / M.shape[0]
