"""End-to-end exact-moment simulation with optional sub-sample concatenation."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_symmetric, check_vector
from .exceptions import DimensionError
from .moments import lmatrix_kollo, rotate_skewness, sample_mean_cov, kollo_skewness
from .orthobasis import RotationBasis, compose_sample, rotation_matrix
from .skewsolver import DEFAULT_MAX_ATTEMPTS, solve_all_columns
from .valuegen import ValueSource, ZeroSource

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TargetMoments:
    """Mean vector, covariance matrix and Kollo skewness vector to be matched exactly."""

    mu: np.ndarray
    V: np.ndarray
    tau: np.ndarray

    def __post_init__(self):
        tau = check_vector(self.tau, name="tau")
        n = tau.shape[0]
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "mu", check_vector(self.mu, n, name="mu"))
        V = check_symmetric(self.V)
        if V.shape != (n, n):
            raise DimensionError(f"V must be {n}x{n}, got {V.shape}")
        object.__setattr__(self, "V", V)

    @property
    def n(self) -> int:
        return self.tau.shape[0]

    @classmethod
    def from_sample(cls, X) -> "TargetMoments":
        mu, V = sample_mean_cov(X)
        return cls(mu=mu, V=V, tau=kollo_skewness(X))

    @classmethod
    def standard(cls, tau) -> "TargetMoments":
        tau = check_vector(tau, name="tau")
        n = tau.shape[0]
        return cls(mu=np.zeros(n), V=np.eye(n), tau=tau)


@dataclass
class SolveConfig:
    """Run settings. ``n_blocks`` is the number of concatenated sub-samples."""

    m: int
    n_blocks: int = 1
    value_source: ValueSource = field(default_factory=ZeroSource)
    max_attempts: int = DEFAULT_MAX_ATTEMPTS
    seed: int | None = None
    sign_choice: str = "random"
    threads: int = 1


@dataclass
class SimulationSample:
    X: np.ndarray
    provenance: dict


def block_lengths(m: int, n: int, n_blocks: int) -> list[int]:
    """Sub-sample lengths: ``N - 1`` blocks of ``l = max(n + 2, m // N)`` and a remainder.

    ``N`` is reduced until the last block also has at least ``n + 2`` rows.
    """
    if m < n + 2:
        raise DimensionError(f"need m >= n + 2 = {n + 2}, got m = {m}")
    N = max(1, int(n_blocks))
    while True:
        l = max(n + 2, m // N)
        last = m - (N - 1) * l
        if N == 1 or last >= n + 2:
            return [l] * (N - 1) + [last]
        N -= 1


def getm(m_block: int, tau, value_source: ValueSource, *, rng=None, max_attempts=DEFAULT_MAX_ATTEMPTS,
         sign_choice="random", block=None):
    """Scaled L matrix ``M = S Omega'`` (``m_block x n``) with Kollo skewness ``tau``.

    Returns ``(M, attempts)`` where ``attempts`` lists the draws used per column.
    """
    tau = check_vector(tau, name="tau")
    Omega = rotation_matrix(tau.shape[0])
    p = rotate_skewness(tau, Omega)
    result = solve_all_columns(p, m_block, value_source, max_attempts=max_attempts,
                               sign_choice=sign_choice, rng=rng, block=block)
    return result.S @ Omega.T, result.attempts


def concatenate(blocks):
    """Stack scaled L blocks; returns ``(stacked, weighted_tau)``.

    ``weighted_tau = sum_k m_k tau_k / sum_k m_k`` with each ``tau_k`` read from
    its block. For scaled L blocks this equals the Kollo skewness of the stack.
    """
    blocks = [np.asarray(b, dtype=float) for b in blocks]
    if not blocks:
        raise DimensionError("nothing to concatenate")
    n = blocks[0].shape[1]
    if any(b.ndim != 2 or b.shape[1] != n for b in blocks):
        raise DimensionError("all blocks must share the same number of columns")
    sizes = np.array([b.shape[0] for b in blocks], dtype=float)
    taus = np.array([lmatrix_kollo(b) for b in blocks])
    return np.vstack(blocks), sizes @ taus / sizes.sum()


def random_permutation(m: int, rng) -> np.ndarray:
    """Uniformly random row order (Fisher-Yates via ``Generator.permutation``)."""
    if m < 1:
        raise DimensionError("m must be positive")
    return rng.permutation(m)


def seed_sequence(seed) -> np.random.SeedSequence:
    """Accept an int, None or an existing SeedSequence."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def krom_simulate(target: TargetMoments, config: SolveConfig) -> SimulationSample:
    """Simulate ``m`` observations whose mean, covariance and Kollo skewness equal ``target``.

    Each block is solved on its own random stream derived from ``(seed, block)``,
    so results do not depend on ``config.threads``.
    """
    started = time.perf_counter()
    n = target.n
    basis = RotationBasis.from_covariance(target.V)
    lengths = block_lengths(config.m, n, config.n_blocks)
    ss = seed_sequence(config.seed)
    perm_seq, *block_seqs = ss.spawn(len(lengths) + 1)

    def run(i):
        rng = np.random.default_rng(block_seqs[i])
        return getm(lengths[i], target.tau, config.value_source, rng=rng,
                    max_attempts=config.max_attempts, sign_choice=config.sign_choice, block=i)

    if config.threads > 1 and len(lengths) > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(run, range(len(lengths))))
    else:
        results = [run(i) for i in range(len(lengths))]

    M, _ = concatenate([r[0] for r in results])
    order = random_permutation(config.m, np.random.default_rng(perm_seq))
    X = compose_sample(M, basis, target.mu, order)
    bounds = np.cumsum([0] + lengths).tolist()
    provenance = {
        "seed": int(ss.entropy) if config.seed is None else config.seed,
        "n_blocks": len(lengths),
        "requested_blocks": int(config.n_blocks),
        "block_boundaries": bounds,
        "attempts": [r[1] for r in results],
        "value_source": config.value_source.describe(),
        "wall_time": time.perf_counter() - started,
    }
    logger.debug("simulated %d x %d sample in %d blocks", config.m, n, len(lengths))
    return SimulationSample(X=X, provenance=provenance)


def moment_errors(X, target: TargetMoments) -> dict:
    """Largest deviations of the sample moments of ``X`` from ``target``.

    Covariance error is relative to ``max |V|``.
    """
    mu, V = sample_mean_cov(X)
    tau = kollo_skewness(X)
    return {
        "mean_abs": float(np.max(np.abs(mu - target.mu))),
        "cov_rel": float(np.max(np.abs(V - target.V)) / max(np.max(np.abs(target.V)), 1e-300)),
        "kollo_abs": float(np.max(np.abs(tau - target.tau))),
    }


MEAN_TOL = 1e-10
COV_TOL = 1e-8
KOLLO_TOL = 1e-6


def moments_match(errors: dict) -> bool:
    return (errors["mean_abs"] <= MEAN_TOL and errors["cov_rel"] <= COV_TOL
            and errors["kollo_abs"] <= KOLLO_TOL)
