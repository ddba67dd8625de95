from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE: dict[str, str] = {}


def random_spd(rng, n, spread=3.0):
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return (Q * rng.uniform(1.0, spread, n)) @ Q.T


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k.split()[0])):
        terminalreporter.write_line(ACCEPTANCE[key])


def random_triple(rng):
    """Column-1 coefficients spanning admissible and inadmissible cases."""
    m = int(rng.integers(6, 200))
    a = rng.normal(0, rng.choice([0.1, 1.0, 5.0]))
    b = rng.uniform(0, 3 * np.sqrt(m))
    c = rng.normal(0, b**1.5)
    return a, b, c


def random_column_system(rng):
    """A column-k system with k <= 4 and m <= 12.

    Mixes systems assembled from genuine partial scaled L matrices, generic
    random systems and rank-deficient ones (duplicated columns of U).
    """
    from krom.skewsolver import ColumnKSystem, build_column_system, solve_all_columns
    from krom.valuegen import Normal, ParametricSource

    k = int(rng.integers(2, 5))
    m = int(rng.integers(k + 3, 13))
    kind = int(rng.integers(0, 3))
    if kind == 0:
        source = ParametricSource(Normal(), sigma=float(rng.uniform(0.3, 0.99)))
        p = rng.normal(0, 1, k)
        try:
            S = solve_all_columns(p[: k - 1], m, source, rng=rng, max_attempts=50).S
        except Exception:
            return None
        w = source.values(m - k - 2, k - 1, rng) * rng.uniform(0.5, 1.6)
        return build_column_system(S, w, p[-1], m, k)
    U = rng.normal(size=(k + 1, k + 2))
    U[-1] = 1.0
    v = rng.normal(size=k + 1)
    if kind == 2:
        for j in range(int(rng.integers(1, k + 1))):
            U[:, j + 1] = U[:, 0] * rng.choice([1.0, 2.0])
        if rng.random() < 0.5:
            v = U @ rng.normal(size=k + 2)
    return ColumnKSystem(U=U, v=v, rhs_quad=float(rng.uniform(0, 2) * m / 4), k=k, m=m)


BAND = 1e-9


def cubic_sweep(count, seed, e_coefficient=2.0 / 9.0):
    """Compare ``lemma1_check`` with the root oracle; returns (agree, disagree, in_band)."""
    from krom.oracle import column1_root_oracle
    from krom.skewsolver import Column1Coefficients, lemma1_check

    rng = np.random.default_rng(seed)
    agree = disagree = band = 0
    for _ in range(count):
        a, b, c = random_triple(rng)
        coef = Column1Coefficients(a, b, c)
        verdict = lemma1_check(coef, e_coefficient=e_coefficient)
        d, e = coef.reduced(e_coefficient)
        if abs(verdict.margin) < BAND * max(1.0, abs(d**3), 6 * e * e):
            band += 1
            continue
        if bool(verdict) == bool(column1_root_oracle(a, b, c)):
            agree += 1
        else:
            disagree += 1
    return agree, disagree, band


def column_k_sweep(count, seed):
    """Compare ``theorem1_check_k`` with the dense oracle; returns (agree, disagree, in_band)."""
    from krom.oracle import columnk_dense_oracle
    from krom.skewsolver import theorem1_check_k

    rng = np.random.default_rng(seed)
    agree = disagree = band = 0
    done = 0
    while done < count:
        system = random_column_system(rng)
        if system is None:
            continue
        done += 1
        verdict = theorem1_check_k(system)
        if verdict.failed_condition.value != "rank" and abs(verdict.margin) < BAND * max(1.0, abs(system.rhs_quad)):
            band += 1
            continue
        if bool(verdict) == bool(columnk_dense_oracle(system)):
            agree += 1
        else:
            disagree += 1
    return agree, disagree, band
