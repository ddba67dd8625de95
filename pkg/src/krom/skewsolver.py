"""Column-by-column solution of the exact Kollo skewness equations.

Column ``k`` of the scaled L matrix ``S`` (``m x n``) must satisfy

    m^{-1} sum_i s_{i1}^2 s_{ik} = p_k        (skewness)
    m^{-1} sum_i s_{ik}^2        = 1          (unit variance)
    sum_i s_{ik} s_{ij}          = 0, j < k   (orthogonality)
    sum_i s_{ik}                 = 0          (zero column sum)

The last ``m - (k + 2)`` entries are prescribed ("arbitrary values") and the
first ``k + 2`` are solved for. Column 1 reduces to a power-sum system in three
unknowns; later columns to a linear system plus one quadratic constraint.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    AdmissibilityExhausted,
    AssumptionViolated,
    DimensionError,
    NotAdmissible,
)

# admissible when the binding slack is >= -ADMISSIBLE_SLACK * scale
ADMISSIBLE_SLACK = 1e-12
RANK_RTOL = 1e-10
DEFAULT_MAX_ATTEMPTS = 200


class FailedCondition(enum.Enum):
    NONE = "none"
    LEMMA1 = "lemma1"
    RANK = "rank"
    QUADRATIC_FORM = "quadratic_form"


@dataclass(frozen=True)
class AdmissibilityVerdict:
    admissible: bool
    failed_condition: FailedCondition
    margin: float

    def __bool__(self) -> bool:
        return bool(self.admissible)


class SignChoice(enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    RANDOM = "random"


def _sign_choice(value) -> SignChoice:
    return value if isinstance(value, SignChoice) else SignChoice(str(value).lower())


# --------------------------------------------------------------------------- #
# Column 1
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class Column1Coefficients:
    """Right-hand sides of ``s1 + s2 + s3 = a``, ``sum s^2 = b``, ``sum s^3 = c``."""

    a: float
    b: float
    c: float

    @classmethod
    def from_values(cls, w, m: int, p1: float) -> "Column1Coefficients":
        w = np.asarray(w, dtype=float)
        if w.shape[0] != m - 3:
            raise DimensionError(f"column 1 expects {m - 3} arbitrary values, got {w.shape[0]}")
        w2 = w * w
        b = m - w2.sum()
        if b > m:
            raise ValueError("b must not exceed m")
        return cls(a=-w.sum(), b=b, c=m * p1 - (w2 * w).sum())

    def reduced(self, e_coefficient: float = 2.0 / 9.0) -> tuple[float, float]:
        """Centred power sums ``(d, e)`` after the shift ``x_i = s_i - a/3``."""
        a, b, c = self.a, self.b, self.c
        return b - a * a / 3.0, c - a * b + e_coefficient * a**3


def lemma1_check(coef: Column1Coefficients, *, e_coefficient: float = 2.0 / 9.0) -> AdmissibilityVerdict:
    """Real solutions exist iff ``d^3 >= 6 e^2``.

    ``e_coefficient`` exists only so the misprinted ``9/2`` variant can be
    exercised against the root oracle; the algebraically correct value is 2/9.
    """
    d, e = coef.reduced(e_coefficient)
    lhs, rhs = d**3, 6.0 * e * e
    margin = float(lhs - rhs)
    if not math.isfinite(margin):
        return AdmissibilityVerdict(False, FailedCondition.LEMMA1, float("nan"))
    ok = bool(margin >= -ADMISSIBLE_SLACK * max(1.0, abs(lhs), rhs))
    return AdmissibilityVerdict(ok, FailedCondition.NONE if ok else FailedCondition.LEMMA1, margin)


def _depressed_root(d: float, e: float) -> float:
    """Real root of ``6x^3 - 3dx - 2e = 0`` that maximises ``2d - 3x^2``."""
    if d <= 0.0:
        return float(np.cbrt(e / 3.0))
    delta3 = (e / 6.0) ** 2 - (d / 6.0) ** 3
    if delta3 < 0.0:
        r = math.sqrt(d / 6.0)
        cos_arg = max(-1.0, min(1.0, (e / 6.0) / r**3))
        theta = math.acos(cos_arg)
        roots = [2.0 * r * math.cos((theta - 2.0 * math.pi * j) / 3.0) for j in range(3)]
        return min(roots, key=abs)
    sq = math.sqrt(delta3)
    return float(np.cbrt(e / 6.0 + sq) + np.cbrt(e / 6.0 - sq))


def solve_column1(coef: Column1Coefficients) -> np.ndarray:
    """Return ``(s11, s21, s31)`` solving the column-1 power-sum system.

    Raises
    ------
    NotAdmissible
        If :func:`lemma1_check` rejects the coefficients.
    """
    verdict = lemma1_check(coef)
    if not verdict:
        raise NotAdmissible(f"column 1 has no real solution (margin {verdict.margin:.3e})")
    d, e = coef.reduced()
    x1 = _depressed_root(d, e)
    disc = max(2.0 * d - 3.0 * x1 * x1, 0.0)
    x2 = 0.5 * (-x1 + math.sqrt(disc))
    x3 = -x1 - x2
    return np.array([x1, x2, x3]) + coef.a / 3.0


# --------------------------------------------------------------------------- #
# Columns 2..n
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class ColumnKSystem:
    """Linear system ``U y = v`` with quadratic constraint ``y'y = rhs_quad``."""

    U: np.ndarray
    v: np.ndarray
    rhs_quad: float
    k: int
    m: int


def build_column_system(S_partial, w, p_k: float, m: int, k: int) -> ColumnKSystem:
    """Assemble ``U``, ``v`` and ``m - sum w^2`` for column ``k`` (1-based, ``k >= 2``).

    ``S_partial`` holds the already solved columns ``1..k-1`` over all ``m``
    rows; ``w`` the ``m - (k + 2)`` prescribed values of column ``k``.
    """
    S_partial = np.asarray(S_partial, dtype=float)
    w = np.asarray(w, dtype=float)
    if k < 2:
        raise DimensionError("column systems start at k = 2")
    if S_partial.ndim != 2 or S_partial.shape[0] != m or S_partial.shape[1] < k - 1:
        raise DimensionError(f"expected {m} x {k - 1} solved columns, got {S_partial.shape}")
    if w.shape != (m - k - 2,):
        raise DimensionError(f"column {k} expects {m - k - 2} arbitrary values, got {w.shape}")
    head = S_partial[: k + 2, : k - 1]
    tail = S_partial[k + 2 :, : k - 1]
    U = np.empty((k + 1, k + 2))
    U[0] = head[:, 0] ** 2
    U[1:k] = head.T
    U[k] = 1.0
    v = np.empty(k + 1)
    v[0] = m * p_k - (tail[:, 0] ** 2) @ w
    v[1:k] = -(tail.T @ w)
    v[k] = -w.sum()
    return ColumnKSystem(U=U, v=v, rhs_quad=float(m - w @ w), k=k, m=m)


@dataclass
class _Decomposition:
    rank: int
    consistent: bool
    idx1: np.ndarray
    idx2: np.ndarray
    a: np.ndarray = field(repr=False)  # U1^+ v
    B: np.ndarray = field(repr=False)  # U1^+ U2
    G: np.ndarray = field(repr=False)
    g: np.ndarray = field(repr=False)
    rhs: float = 0.0  # g'G^{-1}g - v'(U1U1')^+v + m - sum w^2
    scale: float = 1.0


def _independent_columns(U: np.ndarray, rank: int, tol: float) -> np.ndarray:
    """Greedy left-to-right selection of ``rank`` linearly independent columns."""
    chosen: list[int] = []
    for j in range(U.shape[1]):
        if len(chosen) == rank:
            break
        trial = chosen + [j]
        if np.linalg.matrix_rank(U[:, trial], tol=tol) == len(trial):
            chosen = trial
    return np.asarray(chosen, dtype=int)


def _decompose(system: ColumnKSystem) -> _Decomposition:
    U, v = system.U, system.v
    rows, cols = U.shape
    u_svd, sing, vt = np.linalg.svd(U)
    smax = sing[0] if sing.size else 0.0
    tol = RANK_RTOL * smax
    rank = int(np.sum(sing > tol))
    # rank([U, v]) == rank(U) iff v has no component outside the column span of U
    basis = u_svd[:, :rank]
    resid = v - basis @ (basis.T @ v)
    consistent = bool(np.linalg.norm(resid) <= RANK_RTOL * max(smax, np.linalg.norm(v), 1e-300))

    # the leading columns are independent iff the null space restricted to the
    # trailing coordinates is nonsingular
    lead_ok = False
    if rank == rows and rank > 0:
        tail_null = vt[rank:, rank:]
        if tail_null.size == 0:
            lead_ok = True
        elif tail_null.shape == (1, 1):
            lead_ok = abs(tail_null[0, 0]) > 1e-8
        else:
            lead_ok = np.linalg.svd(tail_null, compute_uv=False)[-1] > 1e-8
    if lead_ok:
        idx1, idx2 = np.arange(rank), np.arange(rank, cols)
        sol = np.linalg.solve(U[:, :rank], np.column_stack([v, U[:, rank:]]))
        a, B = sol[:, 0], sol[:, 1:]
    else:
        idx1 = _independent_columns(U, rank, tol)
        rest = np.ones(cols, dtype=bool)
        rest[idx1] = False
        idx2 = np.flatnonzero(rest)
        pinv1 = np.linalg.pinv(U[:, idx1], rcond=RANK_RTOL)
        a = pinv1 @ v
        B = pinv1 @ U[:, idx2]
    # (U1 U1')^+ = U1^+' U1^+ for full column rank U1
    G = np.eye(idx2.size) + B.T @ B
    g = B.T @ a
    quad_v = float(a @ a)
    quad_g = float(g @ np.linalg.solve(G, g))
    rhs = quad_g - quad_v + system.rhs_quad
    scale = max(1.0, abs(system.rhs_quad), quad_v)
    return _Decomposition(rank, consistent, idx1, idx2, a, B, G, g, rhs, scale)


def _verdict(dec: _Decomposition) -> AdmissibilityVerdict:
    if not dec.consistent:
        return AdmissibilityVerdict(False, FailedCondition.RANK, dec.rhs)
    if not math.isfinite(dec.rhs) or dec.rhs < -ADMISSIBLE_SLACK * dec.scale:
        return AdmissibilityVerdict(False, FailedCondition.QUADRATIC_FORM, dec.rhs)
    return AdmissibilityVerdict(True, FailedCondition.NONE, dec.rhs)


def theorem1_check_k(system: ColumnKSystem) -> AdmissibilityVerdict:
    """Check solvability of a column system.

    Two conditions: the linear part must be consistent,
    ``rank(U) == rank([U, v])``, and the quadratic form must have room,
    ``g'G^{-1}g - v'(U1U1')^+ v >= sum w^2 - m`` with ``U1`` a maximal set of
    independent columns of ``U`` (chosen left to right), ``U2`` the rest,
    ``G = I + U2'(U1U1')^+U2`` and ``g = U2'(U1U1')^+ v``. The verdict margin
    is the slack of the second condition.
    """
    return _verdict(_decompose(system))


def _solve_from(dec: _Decomposition, system: ColumnKSystem, sign_choice: SignChoice, rng) -> np.ndarray:
    rhs = max(dec.rhs, 0.0)
    centre = np.linalg.solve(dec.G, dec.g)
    q = dec.idx2.size
    if q == 1:
        z = np.array([math.sqrt(rhs / dec.G[0, 0])])
        if sign_choice is SignChoice.NEGATIVE or (
            sign_choice is SignChoice.RANDOM and _rng(rng).random() < 0.5
        ):
            z = -z
    else:
        # rank-deficient U: any point of the ellipsoid z'Gz = rhs will do
        if sign_choice is SignChoice.RANDOM:
            direction = _rng(rng).standard_normal(q)
        else:
            direction = np.zeros(q)
            direction[0] = 1.0 if sign_choice is SignChoice.POSITIVE else -1.0
        z = direction * math.sqrt(rhs / float(direction @ dec.G @ direction))
    y2 = centre + z
    y1 = dec.a - dec.B @ y2
    y = np.empty(system.U.shape[1])
    y[dec.idx1] = y1
    y[dec.idx2] = y2
    return y


def _rng(rng):
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def solve_column_k(system: ColumnKSystem, sign_choice="random", rng=None) -> np.ndarray:
    """Solve ``U y = v``, ``y'y = rhs_quad`` by completing the square.

    With ``z = y2 - G^{-1} g`` the quadratic becomes ``z'Gz = RHS``. When ``U``
    has full row rank ``z`` is a scalar ``+-sqrt(RHS / G)`` and ``sign_choice``
    picks the branch; otherwise a point on the ellipsoid is taken along a
    (random or first-axis) direction. ``y1 = U1^+ (v - U2 y2)``.
    """
    dec = _decompose(system)
    verdict = _verdict(dec)
    if not verdict:
        raise NotAdmissible(
            f"column {system.k} has no real solution ({verdict.failed_condition.value}, "
            f"margin {verdict.margin:.3e})"
        )
    return _solve_from(dec, system, _sign_choice(sign_choice), rng)


def try_column_k(system: ColumnKSystem, sign_choice="random", rng=None):
    """Check and, when admissible, solve in one pass.

    Returns ``(verdict, y)`` with ``y`` None for an inadmissible system.
    """
    dec = _decompose(system)
    verdict = _verdict(dec)
    if not verdict:
        return verdict, None
    return verdict, _solve_from(dec, system, _sign_choice(sign_choice), rng)


def zero_value_check(p, m: int, first_col, *, variant: str = "exact") -> list[bool]:
    """Admissibility of all-zero arbitrary values, column by column.

    Column 1 needs ``p1^2 <= m/6``. For column ``k > 1`` the zero-value system
    has ``(UU')^{-1}_{11} = 1/t`` with
    ``t = s11^4 + s21^4 + s31^4 - m(m/(k+2) + p1^2 + ... + p_{k-1}^2)``, so the
    condition is ``p_k^2 <= t/m`` with ``t > 0``.

    ``variant="printed"`` evaluates the looser published form
    ``p_k^2 <= t/m + m/(k+1)^2`` with ``m/(k+1)`` inside ``t``; it accepts some
    inadmissible targets and is kept only for comparison.

    Raises
    ------
    AssumptionViolated
        If ``t <= 0``; the caller should fall back to :func:`theorem1_check_k`.
    """
    if variant not in ("exact", "printed"):
        raise ValueError(f"unknown variant {variant!r}")
    p = np.asarray(p, dtype=float)
    s = np.asarray(first_col, dtype=float)[:3]
    fourth = float(np.sum(s**4))
    out = [bool(p[0] ** 2 <= m / 6.0 * (1 + ADMISSIBLE_SLACK))]
    for k in range(2, p.shape[0] + 1):
        width = k + 2 if variant == "exact" else k + 1
        t = fourth - m * (m / width + float(np.sum(p[: k - 1] ** 2)))
        if t <= 0:
            raise AssumptionViolated(f"t = {t:.6g} <= 0 at column {k}")
        bound = t / m if variant == "exact" else t / m + m / ((k + 1) * (k + 1))
        out.append(bool(p[k - 1] ** 2 <= bound * (1 + ADMISSIBLE_SLACK)))
    return out


# --------------------------------------------------------------------------- #
# Whole matrix
# --------------------------------------------------------------------------- #


@dataclass
class SolveResult:
    S: np.ndarray
    attempts: list[int]


def solve_all_columns(p, m: int, value_source, *, max_attempts: int = DEFAULT_MAX_ATTEMPTS,
                      sign_choice="random", rng=None, block=None) -> SolveResult:
    """Build a scaled L matrix ``S`` (``m x n``) with ``m^{-1} sum_i s_{i1}^2 s_i = p``.

    ``value_source`` supplies adjusted arbitrary values through
    ``value_source.values(count, column, rng)``; draws are repeated until the
    column is admissible or ``max_attempts`` is reached.
    """
    p = np.asarray(p, dtype=float)
    n = p.shape[0]
    if m < n + 2:
        raise DimensionError(f"need m >= n + 2 = {n + 2}, got m = {m}")
    rng = _rng(rng)
    sign = _sign_choice(sign_choice)
    retry = getattr(value_source, "is_random", True)
    S = np.zeros((m, n))
    attempts: list[int] = []

    for attempt in range(1, max_attempts + 1):
        w = value_source.values(m - 3, 0, rng)
        coef = Column1Coefficients.from_values(w, m, p[0])
        if lemma1_check(coef):
            S[3:, 0] = w
            S[:3, 0] = solve_column1(coef)
            attempts.append(attempt)
            break
        if not retry:
            raise AdmissibilityExhausted(1, attempt, block)
    else:
        raise AdmissibilityExhausted(1, max_attempts, block)

    for k in range(2, n + 1):
        for attempt in range(1, max_attempts + 1):
            w = value_source.values(m - k - 2, k - 1, rng)
            system = build_column_system(S[:, : k - 1], w, p[k - 1], m, k)
            verdict, y = try_column_k(system, sign, rng)
            if verdict:
                S[k + 2 :, k - 1] = w
                S[: k + 2, k - 1] = y
                attempts.append(attempt)
                break
            if not retry:
                raise AdmissibilityExhausted(k, attempt, block)
        else:
            raise AdmissibilityExhausted(k, max_attempts, block)
    return SolveResult(S=S, attempts=attempts)


def column_residuals(S, p) -> np.ndarray:
    """Max absolute residual of the four column equations, per column."""
    S = np.asarray(S, dtype=float)
    m, n = S.shape
    first_sq = S[:, 0] ** 2
    out = np.empty(n)
    for k in range(n):
        col = S[:, k]
        r = [abs(first_sq @ col / m - p[k]), abs(col @ col / m - 1.0), abs(col.sum())]
        r.extend(abs(col @ S[:, j]) / m for j in range(k))
        out[k] = max(r)
    return out
