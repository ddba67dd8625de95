"""Independent brute-force verifiers and the trial-and-error baseline solver.

Nothing here is used by the production path; these routines exist to check
the closed-form admissibility conditions and to time the method against a
solver that has no pre-check.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .exceptions import InvalidLMatrix, ScaleTooLarge, TrialsExhausted
from .orthobasis import RotationBasis, compose_sample, rotation_matrix, validate_scaled_L
from .moments import rotate_skewness
from .simulation import SimulationSample, TargetMoments, random_permutation
from .skewsolver import ColumnKSystem
from .valuegen import ValueSource

ROOT_IMAG_RTOL = 1e-10
WITNESS_RTOL = 1e-7


@dataclass(frozen=True)
class OracleVerdict:
    solvable: bool
    witness: np.ndarray | None
    residual: float

    def __bool__(self) -> bool:
        return bool(self.solvable)


def _power_residual(s, a, b, c) -> float:
    scale = max(1.0, abs(a), abs(b), abs(c))
    return max(abs(s.sum() - a), abs((s**2).sum() - b), abs((s**3).sum() - c)) / scale


def column1_root_oracle(a: float, b: float, c: float) -> OracleVerdict:
    """Decide whether ``s1 + s2 + s3 = a``, ``sum s^2 = b``, ``sum s^3 = c`` has a real solution.

    Newton's identities turn the power sums into the monic cubic whose roots
    are the unknowns. Each numerically real root ``s1`` leaves
    ``s2 + s3 = a - s1``, ``s2^2 + s3^2 = b - s1^2``, a quadratic with
    discriminant ``2(b - s1^2) - (a - s1)^2``; a non-negative discriminant
    yields a witness that is checked against all three equations.
    """
    e1 = a
    e2 = (a * a - b) / 2.0
    e3 = (c - a * b + e2 * a) / 3.0
    roots = np.roots([1.0, -e1, e2, -e3])
    size = 1.0 + float(np.max(np.abs(roots))) if roots.size else 1.0
    best = OracleVerdict(False, None, math.inf)
    for r in roots:
        if abs(r.imag) > ROOT_IMAG_RTOL * size:
            continue
        s1 = float(r.real)
        rest = a - s1
        disc = 2.0 * (b - s1 * s1) - rest * rest
        if disc < -WITNESS_RTOL * size * size:
            continue
        half = math.sqrt(max(disc, 0.0)) / 2.0
        witness = np.array([s1, rest / 2.0 + half, rest / 2.0 - half])
        resid = _power_residual(witness, a, b, c)
        if resid < best.residual:
            best = OracleVerdict(bool(resid < WITNESS_RTOL), witness, float(resid))
    if not best.solvable:
        return OracleVerdict(False, None, best.residual)
    return best


def columnk_dense_oracle(system: ColumnKSystem, *, max_k: int = 4, max_m: int = 12) -> OracleVerdict:
    """Decide solvability of ``U y = v``, ``y'y = r`` through the null space of ``U``.

    Every solution of the linear part is ``y = y0 + N c`` with ``y0`` the
    minimum-norm solution and ``N`` an orthonormal null-space basis, so
    ``y'y = |y0|^2 + |c|^2``. A solution exists iff the linear part is
    consistent and ``|y0|^2 <= r``.
    """
    if system.k > max_k or system.m > max_m:
        raise ScaleTooLarge(f"oracle limited to k <= {max_k}, m <= {max_m}")
    U, v, r = system.U, system.v, system.rhs_quad
    _, sing, vt = np.linalg.svd(U)
    tol = 1e-10 * (sing[0] if sing.size else 0.0)
    rank = int(np.sum(sing > tol))
    y0 = np.linalg.pinv(U, rcond=1e-10) @ v
    lin_resid = float(np.linalg.norm(U @ y0 - v))
    scale = max(1.0, float(np.linalg.norm(v)), abs(r))
    if lin_resid > 1e-9 * scale:
        return OracleVerdict(False, None, lin_resid)
    slack = r - float(y0 @ y0)
    if slack < 0.0:
        return OracleVerdict(False, None, -slack)
    null = vt[rank:].T
    witness = y0 + null[:, 0] * math.sqrt(slack)
    resid = max(float(np.linalg.norm(U @ witness - v)), abs(float(witness @ witness) - r)) / scale
    return OracleVerdict(bool(resid < WITNESS_RTOL), witness, float(resid))


def kollo_tensor_oracle(M, tol: float = 1e-8) -> np.ndarray:
    """Kollo skewness of a scaled L matrix through the full co-skewness tensor.

    The tensor entries are ``c_ijk = m^{-1} sum_t M_ti M_tj M_tk``; the vector
    is the sum over ``j, k``.
    """
    M = np.asarray(M, dtype=float)
    report = validate_scaled_L(M, tol=tol)
    if not report:
        raise InvalidLMatrix(
            f"not a scaled L matrix (Gram error {report.cov_error:.2e}, sum error {report.sum_error:.2e})"
        )
    m, n = M.shape
    c = np.zeros((n, n, n))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                c[i, j, k] = np.dot(M[:, i] * M[:, j], M[:, k]) / m
    return c.sum(axis=(1, 2))


# --------------------------------------------------------------------------- #
# Trial-and-error baseline
# --------------------------------------------------------------------------- #


def _column_equations(y, head, tail_sums, m, p_k, k):
    """Residuals of the ``k + 2`` column equations in the unknown head ``y``.

    ``head`` holds the first ``k + 2`` rows of the solved columns; for column 1
    the skewness weights are the unknowns themselves.
    """
    sq = y * y if k == 1 else head[:, 0] ** 2
    res = [
        (sq @ y + tail_sums["skew"]) / m - p_k,
        (y @ y + tail_sums["sq"]) / m - 1.0,
    ]
    for j in range(head.shape[1]):
        res.append((head[:, j] @ y + tail_sums["cross"][j]) / m)
    res.append((y.sum() + tail_sums["sum"]) / m)
    return np.array(res)


def _solve_numerically(S, w, p_k, m, k, rng, tries: int):
    head = S[: k + 2, : k - 1]
    tail = S[k + 2 :, : k - 1]
    if k == 1:
        skew = float(np.sum(w**3))
    else:
        skew = float((tail[:, 0] ** 2) @ w)
    sums = {
        "skew": skew,
        "sq": float(w @ w),
        "cross": tail.T @ w,
        "sum": float(w.sum()),
    }
    spread = math.sqrt(max(m - sums["sq"], 1e-12) / (k + 2))
    for _ in range(tries):
        y0 = rng.standard_normal(k + 2) * spread
        sol = optimize.root(_column_equations, y0, args=(head, sums, m, p_k, k), method="hybr",
                            options={"xtol": 1e-13})
        if np.max(np.abs(_column_equations(sol.x, head, sums, m, p_k, k))) < 1e-12:
            return sol.x
    return None


def trial_and_error_baseline(target: TargetMoments, m: int, value_source: ValueSource, *,
                             max_trials: int = 200, starts_per_trial: int = 3,
                             seed=None) -> SimulationSample:
    """Column-wise solver without admissibility checks.

    For each column a fresh set of arbitrary values is drawn and the column
    equations are attacked with a general nonlinear root finder from a few
    random starts; on failure the values are redrawn.

    Raises
    ------
    TrialsExhausted
        If a column stays unsolved after ``max_trials`` draws.
    """
    started = time.perf_counter()
    n = target.n
    rng = np.random.default_rng(seed)
    basis = RotationBasis.from_covariance(target.V)
    Omega = rotation_matrix(n)
    p = rotate_skewness(target.tau, Omega)
    S = np.zeros((m, n))
    trials = []
    for k in range(1, n + 1):
        for trial in range(1, max_trials + 1):
            w = value_source.values(m - k - 2, k - 1, rng)
            y = _solve_numerically(S, w, p[k - 1], m, k, rng, starts_per_trial)
            if y is not None:
                S[k + 2 :, k - 1] = w
                S[: k + 2, k - 1] = y
                trials.append(trial)
                break
        else:
            raise TrialsExhausted(f"column {k} unsolved after {max_trials} trials")
    order = random_permutation(m, rng)
    X = compose_sample(S @ Omega.T, basis, target.mu, order)
    return SimulationSample(X=X, provenance={
        "seed": seed, "attempts": [trials], "wall_time": time.perf_counter() - started,
    })
