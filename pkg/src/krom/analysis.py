"""Experiments: failure-rate grids, the first-column failure-rate formula,
rolling Kollo skewness, bootstrap RMSE and the speed benchmark."""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from ._validation import check_sample, check_vector
from .exceptions import DimensionError, DomainError, KromError, SingularCovariance, WindowTooLarge
from .moments import kollo_skewness, rotate_skewness, sample_mean_cov
from .orthobasis import rotation_matrix
from .simulation import SolveConfig, TargetMoments, krom_simulate, seed_sequence
from .skewsolver import (
    Column1Coefficients,
    build_column_system,
    column_residuals,
    lemma1_check,
    solve_column1,
    try_column_k,
)
from .valuegen import Normal, ParametricSource, ValueSource

# one-sided normal critical values at 90%, 95% and 99%
STAR_THRESHOLDS = (1.282, 1.645, 2.326)


# --------------------------------------------------------------------------- #
# Failure rates
# --------------------------------------------------------------------------- #


@dataclass
class FailureRateCell:
    """Failure percentages for one grid cell.

    ``alpha1`` counts draws whose first column fails the cubic condition,
    ``alpha`` draws for which some column has no real solution.
    """

    n: int
    m: int
    sigma2: float
    tau: list
    alpha1: float
    alpha: float
    trials: int
    verified: int = 0

    def __post_init__(self):
        if not 0.0 <= self.alpha1 <= self.alpha <= 100.0:
            raise AssertionError(f"inconsistent failure rates {self.alpha1} / {self.alpha}")


@dataclass
class FailureRateReport:
    cells: list[FailureRateCell] = field(default_factory=list)

    def rows(self) -> list[dict]:
        return [asdict(c) for c in self.cells]


def _failure_trial(n: int, m: int, p: np.ndarray, source: ValueSource, rng, first_only: bool):
    """One draw of a complete value set; returns ``(col1_failed, any_failed, S)``.

    Later columns depend on the solved earlier ones, so admissible columns are
    solved before moving on.
    """
    S = np.zeros((m, n))
    w = source.values(m - 3, 0, rng)
    coef = Column1Coefficients.from_values(w, m, p[0])
    if not lemma1_check(coef):
        return True, True, None
    if first_only:
        return False, False, None
    S[3:, 0] = w
    S[:3, 0] = solve_column1(coef)
    for k in range(2, n + 1):
        w = source.values(m - k - 2, k - 1, rng)
        system = build_column_system(S[:, : k - 1], w, p[k - 1], m, k)
        verdict, y = try_column_k(system, "random", rng)
        if not verdict:
            return False, True, None
        S[k + 2 :, k - 1] = w
        S[: k + 2, k - 1] = y
    return False, False, S


def empirical_failure_rate(n: int, m: int, sigma2: float, tau=None, trials: int = 10_000, *,
                           source: ValueSource | None = None, seed=None, threads: int = 1,
                           first_only: bool = False, verify_fraction: float = 0.0) -> FailureRateCell:
    """Share of independent value draws for which the column equations have no real solution.

    Values are drawn from ``N(0, sigma2)`` unless ``source`` is given, in which
    case its own ``sigma`` applies. Trial ``i`` uses the ``i``-th child of
    ``SeedSequence(seed)``, so the result does not depend on ``threads``.
    With ``first_only`` only the first column is examined and ``alpha`` equals
    ``alpha1``. A ``verify_fraction`` of successful trials has its solved
    matrix re-checked against the column equations.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    tau = np.zeros(n) if tau is None else check_vector(tau, n, name="tau")
    if m < n + 2:
        raise DimensionError(f"need m >= n + 2 = {n + 2}, got m = {m}")
    if source is None:
        source = ParametricSource(Normal(), sigma=math.sqrt(sigma2))
    p = rotate_skewness(tau, rotation_matrix(n))
    seqs = seed_sequence(seed).spawn(trials)
    verify_every = int(round(1.0 / verify_fraction)) if verify_fraction > 0 else 0

    def run(idx):
        out = np.zeros((len(idx), 2), dtype=bool)
        checked = 0
        for j, i in enumerate(idx):
            f1, f, S = _failure_trial(n, m, p, source, np.random.default_rng(seqs[i]), first_only)
            out[j] = f1, f
            if S is not None and verify_every and i % verify_every == 0:
                if np.max(column_residuals(S, p)) > 1e-8:
                    raise AssertionError(f"solve-through verification failed at trial {i}")
                checked += 1
        return out, checked

    chunks = np.array_split(np.arange(trials), max(1, threads))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(c) for c in chunks]
    flags = np.vstack([r[0] for r in parts])
    return FailureRateCell(
        n=n, m=m, sigma2=float(sigma2), tau=tau.tolist(),
        alpha1=100.0 * float(flags[:, 0].mean()), alpha=100.0 * float(flags[:, 1].mean()),
        trials=trials, verified=sum(r[1] for r in parts),
    )


GRID_N = (5, 20)
GRID_M = (50, 100, 500, 1000)
GRID_SIGMA2 = (0.6, 0.7, 0.8, 0.9)


def failure_rate_grid(trials: int = 10_000, *, n_values=GRID_N, m_values=GRID_M,
                sigma2_values=GRID_SIGMA2, seed=None, threads: int = 1) -> FailureRateReport:
    """Failure rates over an ``(n, sigma2, m)`` grid with ``tau = 0``.

    Each cell gets its own child seed, in grid order.
    """
    cells = [(n, s2, m) for n in n_values for s2 in sigma2_values for m in m_values]
    seqs = seed_sequence(seed).spawn(len(cells))
    report = FailureRateReport()
    for (n, s2, m), ss in zip(cells, seqs):
        report.cells.append(empirical_failure_rate(n, m, s2, None, trials, seed=ss, threads=threads))
    return report


def theoretical_failure_rate_col1(sigma: float, m: int, p1: float = 0.0) -> float:
    """Large-sample probability that normal first-column values are inadmissible.

    The adjusted values have third moment ``M3`` approximately
    ``N(0, 6(m-5)/(m(m-2)) sigma^6)`` and the cubic condition holds iff
    ``|M3 - p1 q| <= sqrt((m-3)/6 (q - sigma^2)^3)`` with ``q = m/(m-3)``.

    Raises
    ------
    DomainError
        If ``m <= 5`` or ``sigma^2`` lies outside ``[0, q]``.
    """
    if m <= 5:
        raise DomainError(f"m must exceed 5, got {m}")
    q = m / (m - 3.0)
    if not (0.0 <= sigma and sigma * sigma <= q * (1 + 1e-12)):
        raise DomainError(f"sigma^2 must lie in [0, {q:.6g}], got {sigma * sigma:.6g}")
    if sigma**3 == 0.0:
        # includes subnormal sigma, where the normal approximation degenerates
        if p1 * p1 <= m / 6.0:
            return 0.0
        return 1.0
    half = math.sqrt((m - 3.0) / 6.0 * max(q - sigma * sigma, 0.0) ** 3)
    scale = math.sqrt(m * (m - 2.0) / (6.0 * (m - 5.0))) / sigma**3
    upper = scale * (p1 * q + half)
    lower = scale * (p1 * q - half)
    # survival functions keep precision in the far tails
    return float(min(1.0, stats.norm.sf(upper) + stats.norm.cdf(lower)))


# --------------------------------------------------------------------------- #
# Rolling windows
# --------------------------------------------------------------------------- #


@dataclass
class RollingKollo:
    """Kollo skewness over windows ending at ``end`` (0-based row index)."""

    end: np.ndarray
    tau: np.ndarray
    p: np.ndarray

    @property
    def valid(self) -> np.ndarray:
        return ~np.isnan(self.tau).any(axis=1)


def rolling_kollo(returns, window: int) -> RollingKollo:
    """Kollo and rotated Kollo skewness on every window of ``window`` consecutive rows.

    Windows with a singular covariance matrix yield NaN rows.
    """
    X = check_sample(returns, name="returns")
    T, n = X.shape
    if window < n + 2:
        raise DimensionError(f"window must be at least n + 2 = {n + 2}")
    if window > T:
        raise WindowTooLarge(f"window {window} exceeds the {T} available rows")
    Omega = rotation_matrix(n)
    ends = np.arange(window - 1, T)
    tau = np.full((ends.size, n), np.nan)
    p = np.full((ends.size, n), np.nan)
    for i, t in enumerate(ends):
        try:
            tau[i] = kollo_skewness(X[t - window + 1 : t + 1])
        except SingularCovariance:
            continue
        p[i] = rotate_skewness(tau[i], Omega)
    return RollingKollo(end=ends, tau=tau, p=p)


# --------------------------------------------------------------------------- #
# Bootstrap RMSE
# --------------------------------------------------------------------------- #


@dataclass
class RmseSummary:
    mean: float
    se: float

    @property
    def ratio(self) -> float:
        return self.mean / self.se if self.se > 0 else math.inf if self.mean > 0 else 0.0

    @property
    def stars(self) -> str:
        return "*" * sum(self.ratio > c for c in STAR_THRESHOLDS)


@dataclass
class RmseReport:
    """RMSE of the mean, covariance and Kollo skewness across replications.

    ``se`` is the standard deviation of the RMSE over replications.
    """

    m: int
    replications: int
    mean: RmseSummary
    cov: RmseSummary
    kollo: RmseSummary
    samples: np.ndarray = field(repr=False)

    def as_dict(self) -> dict:
        out = {"m": self.m, "replications": self.replications}
        for name in ("mean", "cov", "kollo"):
            s = getattr(self, name)
            out[f"rmse_{name}"] = {"mean": s.mean, "se": s.se, "ratio": s.ratio, "stars": s.stars}
        return out


def moment_rmse(X, mu, V, tau) -> np.ndarray:
    """Root sum of squared deviations of the sample mean, covariance and Kollo skewness."""
    mu_hat, V_hat = sample_mean_cov(X)
    tau_hat = kollo_skewness(X)
    return np.array([
        np.sqrt(np.sum((mu - mu_hat) ** 2)),
        np.sqrt(np.sum((V - V_hat) ** 2)),
        np.sqrt(np.sum((tau - tau_hat) ** 2)),
    ])


def bootstrap_rmse_study(source, m: int, replications: int = 10_000, *, seed=None,
                         replace: bool = True, sampler=None, threads: int = 1) -> RmseReport:
    """Sampling error of plain row bootstrapping against the source's own moments.

    Each replication draws ``m`` whole rows of ``source``. ``replace=False``
    draws without replacement (with ``m`` equal to the row count this returns
    the source itself up to order). ``sampler(rng)`` may instead return each
    replicated sample directly, e.g. a simulator. Replication ``r`` uses the
    ``r``-th child of ``SeedSequence(seed)``.
    """
    if replications < 2:
        raise ValueError("replications must be >= 2")
    X = check_sample(source, name="source")
    T = X.shape[0]
    if not replace and m > T:
        raise DimensionError(f"cannot draw {m} of {T} rows without replacement")
    mu, V = sample_mean_cov(X)
    tau = kollo_skewness(X)
    seqs = seed_sequence(seed).spawn(replications)

    def run(idx):
        out = np.empty((len(idx), 3))
        for j, r in enumerate(idx):
            rng = np.random.default_rng(seqs[r])
            if sampler is not None:
                Y = sampler(rng)
            elif replace:
                Y = X[rng.integers(0, T, size=m)]
            else:
                Y = X[rng.permutation(T)[:m]]
            out[j] = moment_rmse(Y, mu, V, tau)
        return out

    chunks = np.array_split(np.arange(replications), max(1, threads))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            out = np.vstack(list(pool.map(run, chunks)))
    else:
        out = run(chunks[0])
    means = out.mean(axis=0)
    sds = out.std(axis=0, ddof=1)
    return RmseReport(
        m=m, replications=replications,
        mean=RmseSummary(float(means[0]), float(sds[0])),
        cov=RmseSummary(float(means[1]), float(sds[1])),
        kollo=RmseSummary(float(means[2]), float(sds[2])),
        samples=out,
    )


# --------------------------------------------------------------------------- #
# Benchmark
# --------------------------------------------------------------------------- #


def bench_timing(n: int, m: int, targets, *, seed=None, sigma2: float = 0.7,
                 max_attempts: int = 200) -> dict:
    """Mean wall time per simulation for the admissibility-checked solver vs the baseline.

    Both methods draw normal values with variance ``sigma2`` and see the same
    per-target seeds. Failures are recorded, not raised.
    """
    from .oracle import trial_and_error_baseline

    targets = [check_vector(t, n, name="tau") for t in targets]
    source = ParametricSource(Normal(), sigma=math.sqrt(sigma2))
    seqs = seed_sequence(seed).spawn(len(targets))
    krom_t, base_t, krom_ok, base_ok = [], [], [], []
    for tau, ss in zip(targets, seqs):
        target = TargetMoments.standard(tau)
        child = int(ss.generate_state(1)[0])
        start = time.perf_counter()
        try:
            krom_simulate(target, SolveConfig(m=m, value_source=source, seed=child,
                                              max_attempts=max_attempts))
            krom_ok.append(True)
        except KromError:
            krom_ok.append(False)
        krom_t.append(time.perf_counter() - start)
        start = time.perf_counter()
        try:
            trial_and_error_baseline(target, m, source, max_trials=max_attempts, seed=child)
            base_ok.append(True)
        except KromError:
            base_ok.append(False)
        base_t.append(time.perf_counter() - start)
    krom_t, base_t = np.array(krom_t), np.array(base_t)
    return {
        "n": n, "m": m, "count": len(targets),
        "krom_mean": float(krom_t.mean()), "krom_sd": float(krom_t.std(ddof=1)) if len(targets) > 1 else 0.0,
        "baseline_mean": float(base_t.mean()),
        "baseline_sd": float(base_t.std(ddof=1)) if len(targets) > 1 else 0.0,
        "ratio": float(base_t.mean() / krom_t.mean()),
        "krom_success": krom_ok, "baseline_success": base_ok,
    }
