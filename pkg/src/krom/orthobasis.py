"""Orthogonal machinery: the Helmert-style rotation, covariance factors and L-matrix checks."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from ._validation import check_sample, check_square, check_symmetric, check_vector
from .exceptions import DimensionError, NotPositiveDefinite, SingularFactor
from .moments import sample_mean_cov


def build_omega(n: int) -> np.ndarray:
    """Orthogonal ``n x n`` rotation whose first column is ``n^{-1/2} 1``.

    Column ``j >= 2`` (1-based) is zero above row ``j-1``, carries the pivot
    ``(-1)^(n-1) / sqrt((n-j+2)/(n-j+1))`` in row ``j-1`` and the tail value
    ``(-1)^n / sqrt((n-j+2)(n-j+1))`` below it. Consequently
    ``1' Omega = sqrt(n) e_1'``.
    """
    n = int(n)
    if n < 2:
        raise DimensionError(f"rotation needs n >= 2, got {n}")
    Omega = np.zeros((n, n))
    Omega[:, 0] = 1.0 / np.sqrt(n)
    pivot_sign = (-1.0) ** (n - 1)
    tail_sign = (-1.0) ** n
    for j in range(2, n + 1):
        hi, lo = n - j + 2, n - j + 1
        Omega[j - 2, j - 1] = pivot_sign / np.sqrt(hi / lo)
        Omega[j - 1:, j - 1] = tail_sign / np.sqrt(hi * lo)
    return Omega


def rotation_matrix(n: int) -> np.ndarray:
    """``build_omega`` extended to the trivial one-variable case."""
    return np.ones((1, 1)) if n == 1 else build_omega(n)


def factor_covariance(V, method: str = "symmetric") -> np.ndarray:
    """Return ``A`` with ``A' A = V``.

    ``method="symmetric"`` (default) gives the symmetric square root ``V^{1/2}``;
    it is the only factor under which the Kollo skewness of a rotated scaled
    L matrix survives standardization by ``V^{-1/2}`` unchanged.
    ``method="cholesky"`` gives the upper-triangular Cholesky factor.
    """
    V = check_symmetric(V)
    if method == "cholesky":
        try:
            return linalg.cholesky(V, lower=False)
        except linalg.LinAlgError as exc:
            raise NotPositiveDefinite("covariance matrix is not positive definite") from exc
    if method != "symmetric":
        raise ValueError(f"unknown factorization method {method!r}")
    vals, vecs = np.linalg.eigh(V)
    n = V.shape[0]
    if vals.min() <= 1e-12 * max(np.trace(V), 0.0) / n:
        raise NotPositiveDefinite("covariance matrix is not positive definite")
    A = (vecs * np.sqrt(vals)) @ vecs.T
    return 0.5 * (A + A.T)


@dataclass(frozen=True)
class RotationBasis:
    """The rotation ``Omega`` paired with a covariance factor ``A`` (``A'A = V``)."""

    Omega: np.ndarray
    A: np.ndarray

    @classmethod
    def from_covariance(cls, V, method: str = "symmetric") -> "RotationBasis":
        A = factor_covariance(V, method=method)
        return cls(Omega=rotation_matrix(A.shape[0]), A=A)

    @property
    def n(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True)
class LMatrixReport:
    cov_error: float
    sum_error: float
    cov_tol: float
    sum_tol: float

    @property
    def passed(self) -> bool:
        return self.cov_error <= self.cov_tol and self.sum_error <= self.sum_tol

    def __bool__(self) -> bool:
        return self.passed


def validate_scaled_L(S, tol: float = 1e-8) -> LMatrixReport:
    """Diagnose the scaled L constraints ``S'S = m I`` and ``1'S = 0``.

    Column sums are compared against ``tol`` and the Gram entries against
    ``tol * m``.
    """
    S = np.asarray(S, dtype=float)
    if S.ndim != 2:
        raise DimensionError("S must be a matrix")
    m, n = S.shape
    gram = S.T @ S - m * np.eye(n)
    return LMatrixReport(
        cov_error=float(np.max(np.abs(gram))) if S.size else 0.0,
        sum_error=float(np.max(np.abs(S.sum(axis=0)))) if S.size else 0.0,
        cov_tol=tol * m,
        sum_tol=tol,
    )


def compose_sample(M, basis: RotationBasis, mu, order=None) -> np.ndarray:
    """``X = 1 mu' + Q M A`` where ``M`` is already rotated (``M = S Omega'``).

    ``order`` is a row permutation (index array); ``None`` keeps the row order.
    """
    M = np.asarray(M, dtype=float)
    mu = check_vector(mu, basis.n, name="mu")
    if order is not None:
        M = M[np.asarray(order)]
    return mu + M @ basis.A


def recover_scaled_L(X, basis: RotationBasis, mu=None) -> np.ndarray:
    """Scaled L matrix implied by a sample: ``S* = (X - 1 mu') A^{-1} Omega``.

    ``mu`` defaults to the sample mean of ``X``.
    """
    X = check_sample(X)
    n = X.shape[1]
    A = check_square(basis.A, n, name="A")
    mu = X.mean(axis=0) if mu is None else check_vector(mu, n, name="mu")
    try:
        with warnings.catch_warnings():
            # singularity is reported below as an exception
            warnings.simplefilter("ignore", linalg.LinAlgWarning)
            lu = linalg.lu_factor(A, check_finite=True)
    except (linalg.LinAlgError, ValueError) as exc:
        raise SingularFactor("covariance factor is singular") from exc
    if np.min(np.abs(np.diag(lu[0]))) <= 1e-14 * max(1.0, np.max(np.abs(A))):
        raise SingularFactor("covariance factor is singular")
    # (X - mu) A^{-1} = solve(A', (X - mu)')'
    Z = linalg.lu_solve(lu, (X - mu).T, trans=1).T
    return Z @ basis.Omega


def empirical_scaled_L(X, method: str = "symmetric") -> np.ndarray:
    """Rotated scaled L matrix of a sample under its own mean and covariance."""
    mu, V = sample_mean_cov(X)
    return recover_scaled_L(X, RotationBasis.from_covariance(V, method=method), mu)
