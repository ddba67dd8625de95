"""Arbitrary-value generation for the undetermined entries of each column.

Values come from a bootstrap of an empirical scaled L matrix, from a
parametric family, or are all zero. Random draws are re-standardized to mean
zero and standard deviation ``sigma`` before use.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import optimize, stats

from .exceptions import (
    DegenerateValues,
    DomainError,
    RootSearchFailed,
    SkewnessOutOfRange,
    SourceTooNarrow,
)

SN_SKEW_LIMIT = 0.995


def adjust_values(z, sigma: float) -> np.ndarray:
    """Return ``sigma * (z - mean(z)) / sd(z)`` with the population sd.

    Raises
    ------
    DegenerateValues
        If fewer than two values are given or they are all equal.
    """
    z = np.asarray(z, dtype=float)
    if z.shape[0] < 2:
        raise DegenerateValues("need at least two values to standardize")
    centred = z - z.mean()
    sd = math.sqrt(float(centred @ centred) / z.shape[0])
    if sd == 0.0 or not math.isfinite(sd):
        raise DegenerateValues("values have zero spread")
    return sigma * centred / sd


# --------------------------------------------------------------------------- #
# Parametric families
# --------------------------------------------------------------------------- #


class Family:
    """A univariate distribution that can draw i.i.d. values."""

    name = "family"

    def frozen(self):
        raise NotImplementedError

    def rvs(self, count: int, rng: np.random.Generator) -> np.ndarray:
        return np.asarray(self.frozen().rvs(size=count, random_state=rng), dtype=float)

    def moments(self) -> tuple[float, float, float]:
        """(mean, variance, skewness)."""
        m, v, s = self.frozen().stats(moments="mvs")
        return float(m), float(v), float(s)


@dataclass(frozen=True)
class Normal(Family):
    mu: float = 0.0
    sigma: float = 1.0
    name = "normal"

    def frozen(self):
        return stats.norm(loc=self.mu, scale=self.sigma)

    def rvs(self, count, rng):
        return self.mu + self.sigma * rng.standard_normal(count)


@dataclass(frozen=True)
class StudentT(Family):
    mu: float = 0.0
    sigma: float = 1.0
    nu: float = 8.0
    min_nu: float = 6.0
    name = "t"

    def __post_init__(self):
        if self.min_nu < 3.0:
            raise DomainError("degrees of freedom floor cannot go below 3")
        if not self.nu > self.min_nu:
            raise DomainError(f"Student t needs nu > {self.min_nu}, got {self.nu}")

    def frozen(self):
        return stats.t(df=self.nu, loc=self.mu, scale=self.sigma)


@dataclass(frozen=True)
class SkewNormal(Family):
    xi: float = 0.0
    omega: float = 1.0
    alpha: float = 0.0
    name = "sn"

    def frozen(self):
        return stats.skewnorm(a=self.alpha, loc=self.xi, scale=self.omega)


@dataclass(frozen=True)
class NIG(Family):
    alpha: float = 1.0
    beta: float = 0.0
    delta: float = 1.0
    mu: float = 0.0
    name = "nig"

    def __post_init__(self):
        if not (self.alpha > abs(self.beta) and self.delta > 0):
            raise DomainError("NIG needs alpha > |beta| and delta > 0")

    def frozen(self):
        # scipy's standardized form uses a = alpha*delta, b = beta*delta, scale = delta
        return stats.norminvgauss(a=self.alpha * self.delta, b=self.beta * self.delta,
                                  loc=self.mu, scale=self.delta)


@dataclass(frozen=True)
class Beta4(Family):
    alpha: float = 2.0
    beta: float = 2.0
    b: float = 0.0
    c: float = 1.0
    name = "beta"

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0 and self.c > self.b):
            raise DomainError("Beta needs alpha, beta > 0 and c > b")

    def frozen(self):
        return stats.beta(self.alpha, self.beta, loc=self.b, scale=self.c - self.b)


# --------------------------------------------------------------------------- #
# Standardized parameters for a target skewness
# --------------------------------------------------------------------------- #


def sn_skewness(delta: float) -> float:
    return math.sqrt(2.0) * (4.0 - math.pi) * delta**3 / (math.pi - 2.0 * delta**2) ** 1.5


def sn_params_for_skewness(p1: float) -> tuple[float, float, float]:
    """Skew-normal ``(xi, omega, alpha)`` with mean 0, variance 1 and skewness ``p1``.

    The attainable range is ``|p1| < 0.995``.
    """
    p1 = float(p1)
    if not abs(p1) < SN_SKEW_LIMIT:
        raise SkewnessOutOfRange(
            f"skewness out of range ({-SN_SKEW_LIMIT}, {SN_SKEW_LIMIT}) for the skew normal: {p1}"
        )
    if p1 == 0.0:
        return 0.0, 1.0, 0.0
    target = abs(p1)
    # skewness is increasing in delta on [0, 1)
    delta = optimize.brentq(lambda d: sn_skewness(d) - target, 0.0, 1.0 - 1e-15,
                            xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    delta = math.copysign(delta, p1)
    alpha = delta / math.sqrt(1.0 - delta * delta)
    omega = 1.0 / math.sqrt(1.0 - 2.0 * delta * delta / math.pi)
    xi = -omega * delta * math.sqrt(2.0 / math.pi)
    return xi, omega, alpha


def nig_params_for_skewness(p1: float) -> tuple[float, float, float, float]:
    """NIG ``(alpha, beta, delta, mu)`` with mean 0, variance 1 and skewness ``p1``.

    Uses ``beta = p1/3`` so that ``3 beta / (alpha^2 - beta^2) = p1`` gives
    ``gamma = sqrt(alpha^2 - beta^2) = 1``; then ``delta = gamma^3 / alpha^2``
    and ``mu = -delta beta / gamma``. ``p1 = 0`` returns the symmetric member
    ``(1, 0, 1, 0)``.
    """
    p1 = float(p1)
    if not math.isfinite(p1):
        raise DomainError("skewness must be finite")
    if p1 == 0.0:
        return 1.0, 0.0, 1.0, 0.0
    beta = p1 / 3.0
    alpha = math.sqrt(beta * beta + 3.0 * beta / p1)
    gamma = math.sqrt((alpha - beta) * (alpha + beta))
    delta = gamma**3 / alpha**2
    mu = -delta * beta / gamma
    return alpha, beta, delta, mu


def beta_skewness(alpha: float, beta: float) -> float:
    s = alpha + beta
    return 2.0 * (beta - alpha) * math.sqrt(s + 1.0) / ((s + 2.0) * math.sqrt(alpha * beta))


def beta4_params_for_skewness(p1: float, total: float = 4.0) -> tuple[float, float, float, float]:
    """Four-parameter Beta ``(alpha, beta, b, c)`` with mean 0, variance 1, skewness ``p1``.

    ``alpha + beta`` is held at ``total``; skewness is then strictly decreasing
    in ``alpha`` on ``(0, total)`` and takes every real value, so a bracketed
    root search always succeeds. ``(b, c)`` solve ``alpha c + beta b = 0`` and
    ``c - b = (alpha + beta) sqrt(alpha + beta + 1) / sqrt(alpha beta)``.
    """
    p1 = float(p1)
    if not math.isfinite(p1):
        raise DomainError("skewness must be finite")
    s = float(total)
    if p1 == 0.0:
        alpha = beta = s / 2.0
    else:
        f = lambda a: beta_skewness(a, s - a) - p1
        lo, hi = s * 1e-3, s * (1 - 1e-3)
        for _ in range(60):
            if f(lo) > 0 > f(hi):
                break
            lo, hi = lo * 1e-2, s - (s - hi) * 1e-2
        else:
            raise RootSearchFailed(f"could not bracket Beta skewness {p1} with alpha + beta = {s}")
        if not f(lo) > 0 > f(hi):
            raise RootSearchFailed(f"could not bracket Beta skewness {p1} (lo={lo}, hi={hi})")
        alpha = optimize.brentq(f, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
        beta = s - alpha
    width = s * math.sqrt(s + 1.0) / math.sqrt(alpha * beta)
    b = -width * alpha / s
    c = width * beta / s
    return alpha, beta, b, c


def family_for_skewness(name: str, p1: float = 0.0) -> Family:
    """Standardized family member (mean 0, variance 1) with skewness ``p1``."""
    name = name.lower()
    if name in ("normal", "n"):
        if p1 != 0.0:
            raise SkewnessOutOfRange("the normal family only attains skewness 0")
        return Normal()
    if name == "sn":
        return SkewNormal(*sn_params_for_skewness(p1))
    if name == "nig":
        return NIG(*nig_params_for_skewness(p1))
    if name == "beta":
        return Beta4(*beta4_params_for_skewness(p1))
    raise ValueError(f"unknown family {name!r}")


# --------------------------------------------------------------------------- #
# Value sources
# --------------------------------------------------------------------------- #


def _check_sigma(sigma: float) -> float:
    sigma = float(sigma)
    if not sigma > 0.0 or not math.isfinite(sigma):
        raise DomainError(f"sigma must be positive, got {sigma}")
    if sigma > 1.0:
        warnings.warn(f"sigma = {sigma:.4g} exceeds 1; admissibility becomes unlikely", stacklevel=3)
    return sigma


class ValueSource:
    """Base class: raw draws followed by the mean/variance adjustment."""

    kind = "base"
    is_random = True

    def __init__(self, sigma: float = 1.0):
        self.sigma = _check_sigma(sigma)

    def draw_raw(self, count: int, column: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def values(self, count: int, column: int, rng: np.random.Generator) -> np.ndarray:
        """Adjusted values for ``column`` (0-based).

        Fewer than two slots cannot be standardized and are filled with zeros.
        """
        if count < 2:
            return np.zeros(max(count, 0))
        return adjust_values(self.draw_raw(count, column, rng), self.sigma)

    def describe(self) -> dict:
        return {"kind": self.kind, "sigma": self.sigma}


class ZeroSource(ValueSource):
    kind = "zero"
    is_random = False

    def __init__(self):
        self.sigma = 0.0

    def draw_raw(self, count, column, rng):
        return np.zeros(max(count, 0))

    def values(self, count, column, rng):
        return np.zeros(max(count, 0))


class BootstrapSource(ValueSource):
    """Resample, with replacement and independently per column, from an empirical scaled L matrix."""

    kind = "bootstrap"

    def __init__(self, source, sigma: float = 1.0):
        super().__init__(sigma)
        source = np.asarray(source, dtype=float)
        if source.ndim == 1:
            source = source[:, None]
        if source.shape[0] < 2:
            raise SourceTooNarrow("bootstrap source needs at least two rows")
        self.source = source

    def draw_raw(self, count, column, rng):
        if column >= self.source.shape[1]:
            raise SourceTooNarrow(
                f"bootstrap source has {self.source.shape[1]} columns, column {column} requested"
            )
        idx = rng.integers(0, self.source.shape[0], size=count)
        return self.source[idx, column]

    def describe(self):
        return {"kind": self.kind, "sigma": self.sigma, "rows": int(self.source.shape[0])}


class ParametricSource(ValueSource):
    """I.i.d. draws from one family, or one family per column."""

    kind = "parametric"

    def __init__(self, family: Family | Sequence[Family], sigma: float = 1.0):
        super().__init__(sigma)
        self.families = list(family) if isinstance(family, (list, tuple)) else [family]
        if not self.families:
            raise SourceTooNarrow("at least one family is required")

    def family(self, column: int) -> Family:
        if len(self.families) == 1:
            return self.families[0]
        if column >= len(self.families):
            raise SourceTooNarrow(f"no family configured for column {column}")
        return self.families[column]

    def draw_raw(self, count, column, rng):
        return self.family(column).rvs(count, rng)

    def describe(self):
        return {
            "kind": self.kind,
            "sigma": self.sigma,
            "families": [dict(name=f.name, **{k: v for k, v in vars(f).items()})
                         for f in self.families],
        }


def draw_raw(source: ValueSource, count: int, column_index: int, rng) -> np.ndarray:
    """Unadjusted draws from ``source``."""
    if count < 0:
        raise ValueError("count must be non-negative")
    return source.draw_raw(count, column_index, rng)


SOURCE_KINDS = ("zero", "bootstrap", "normal", "sn", "nig", "beta", "t")


def make_value_source(kind: str, sigma2: float = 0.5, *, p=None, data=None) -> ValueSource:
    """Build a value source by name.

    ``sn``, ``nig`` and ``beta`` use one standardized family member per column
    whose skewness equals the rotated target ``p[k]``; skew-normal targets
    beyond its attainable range are clipped to the nearest attainable value.
    ``bootstrap`` resamples the rotated scaled L matrix ``data``.
    """
    kind = kind.lower()
    if kind not in SOURCE_KINDS:
        raise ValueError(f"unknown source {kind!r}; expected one of {', '.join(SOURCE_KINDS)}")
    if kind == "zero":
        return ZeroSource()
    sigma = math.sqrt(sigma2)
    if kind == "bootstrap":
        if data is None:
            raise SourceTooNarrow("bootstrap source requires data")
        return BootstrapSource(data, sigma)
    if kind == "normal":
        return ParametricSource(Normal(), sigma)
    if kind == "t":
        return ParametricSource(StudentT(), sigma)
    if p is None:
        raise ValueError(f"source {kind!r} needs the rotated target skewness")
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if kind == "sn":
        limit = SN_SKEW_LIMIT - 1e-3
        if np.any(np.abs(p) > limit):
            warnings.warn("skew-normal cannot attain the target skewness; clipping", stacklevel=2)
        p = np.clip(p, -limit, limit)
    return ParametricSource([family_for_skewness(kind, float(pk)) for pk in p], sigma)
