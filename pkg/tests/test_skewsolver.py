from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from krom.exceptions import (
    AdmissibilityExhausted,
    AssumptionViolated,
    DimensionError,
    NotAdmissible,
)
from krom.moments import rotate_skewness
from krom.oracle import column1_root_oracle
from krom.orthobasis import rotation_matrix, validate_scaled_L
from krom.skewsolver import (
    Column1Coefficients,
    ColumnKSystem,
    FailedCondition,
    build_column_system,
    column_residuals,
    lemma1_check,
    solve_all_columns,
    solve_column1,
    solve_column_k,
    theorem1_check_k,
    try_column_k,
    zero_value_check,
)
from krom.valuegen import BootstrapSource, Normal, ParametricSource, ZeroSource

from conftest import random_column_system, random_triple


def power_residual(s, coef):
    return max(abs(s.sum() - coef.a), abs((s**2).sum() - coef.b), abs((s**3).sum() - coef.c))


class TestColumn1Check:
    def test_zero_value_bound(self):
        m = 60
        for p1 in (0.0, 1.0, -2.5, math.sqrt(m / 6) * 0.999):
            assert lemma1_check(Column1Coefficients(0.0, m, m * p1))
        assert not lemma1_check(Column1Coefficients(0.0, m, m * math.sqrt(m / 6) * 1.001))

    def test_zero_system(self):
        assert lemma1_check(Column1Coefficients(0.0, 0.0, 0.0))
        np.testing.assert_array_equal(solve_column1(Column1Coefficients(0.0, 0.0, 0.0)), 0.0)

    def test_unsolvable_triple(self):
        verdict = lemma1_check(Column1Coefficients(0.0, 6.0, 7.0))
        assert not verdict
        assert verdict.failed_condition is FailedCondition.LEMMA1
        assert not column1_root_oracle(0.0, 6.0, 7.0)
        with pytest.raises(NotAdmissible):
            solve_column1(Column1Coefficients(0.0, 6.0, 7.0))

    def test_boundary_is_admissible(self):
        m = 6
        coef = Column1Coefficients(0.0, m, m * math.sqrt(m / 6))
        assert lemma1_check(coef)
        assert column1_root_oracle(coef.a, coef.b, coef.c)
        assert power_residual(solve_column1(coef), coef) < 1e-8

    def test_no_arbitrary_values(self):
        s = solve_column1(Column1Coefficients(0.0, 3.0, 0.0))
        np.testing.assert_allclose(np.sort(s), [-math.sqrt(1.5), 0.0, math.sqrt(1.5)], atol=1e-12)

    def test_random_residuals(self, rng):
        solved = 0
        for _ in range(2000):
            coef = Column1Coefficients(*random_triple(rng))
            if lemma1_check(coef):
                s = solve_column1(coef)
                scale = max(1.0, abs(coef.b), abs(coef.c))
                assert power_residual(s, coef) < 1e-8 * scale
                solved += 1
        assert solved > 200

    def test_printed_coefficient_disagrees_with_roots(self, rng):
        bad = 0
        for _ in range(2000):
            a, b, c = random_triple(rng)
            printed = lemma1_check(Column1Coefficients(a, b, c), e_coefficient=4.5)
            if bool(printed) != bool(column1_root_oracle(a, b, c)):
                bad += 1
        assert bad > 0

    @given(st.floats(-3, 3), st.floats(0.01, 20), st.floats(-30, 30))
    def test_agrees_with_oracle(self, a, b, c):
        verdict = lemma1_check(Column1Coefficients(a, b, c))
        assume(abs(verdict.margin) > 1e-9 * max(1.0, b**3))
        assert bool(verdict) == bool(column1_root_oracle(a, b, c))


class TestColumnSystem:
    def test_zero_values_k2(self):
        m, k = 10, 2
        S = np.zeros((m, 1))
        S[:3, 0] = solve_column1(Column1Coefficients(0.0, m, 0.0))
        sys_ = build_column_system(S, np.zeros(m - 4), 0.3, m, k)
        np.testing.assert_allclose(sys_.v, [m * 0.3, 0.0, 0.0])
        np.testing.assert_allclose(sys_.U[0, :3], S[:3, 0] ** 2)
        assert sys_.U[0, 3] == 0.0 and sys_.U[1, 3] == 0.0
        assert sys_.rhs_quad == m

    def test_no_arbitrary_values(self, rng):
        m, k = 5, 3
        S = rng.normal(size=(m, 2))
        sys_ = build_column_system(S, np.zeros(0), 0.7, m, k)
        np.testing.assert_allclose(sys_.v, [m * 0.7, 0, 0, 0])
        assert sys_.rhs_quad == m

    def test_naive_assembly(self, rng):
        m, k = 11, 3
        S = rng.normal(size=(m, k - 1))
        w = rng.normal(size=m - k - 2)
        pk = 0.4
        sys_ = build_column_system(S, w, pk, m, k)
        for j in range(k + 2):
            assert sys_.U[0, j] == pytest.approx(S[j, 0] ** 2)
            for c in range(1, k):
                assert sys_.U[c, j] == pytest.approx(S[j, c - 1])
            assert sys_.U[k, j] == 1.0
        assert sys_.v[0] == pytest.approx(m * pk - sum(S[k + 2 + i, 0] ** 2 * w[i] for i in range(w.size)))
        for c in range(1, k):
            assert sys_.v[c] == pytest.approx(-sum(S[k + 2 + i, c - 1] * w[i] for i in range(w.size)))
        assert sys_.v[k] == pytest.approx(-w.sum())
        assert sys_.rhs_quad == pytest.approx(m - w @ w)

    def test_shape_checks(self):
        with pytest.raises(DimensionError):
            build_column_system(np.zeros((10, 1)), np.zeros(3), 0.0, 10, 2)
        with pytest.raises(DimensionError):
            build_column_system(np.zeros((10, 1)), np.zeros(6), 0.0, 10, 1)


class TestColumnKCheck:
    def _zero_system(self, m=10, k=2, pk=0.2):
        S = np.zeros((m, k - 1))
        S[:3, 0] = solve_column1(Column1Coefficients(0.0, m, 0.0))
        for j in range(1, k - 1):
            sys_ = build_column_system(S[:, :j], np.zeros(m - j - 3), 0.0, m, j + 1)
            S[: j + 3, j] = solve_column_k(sys_, "positive")
        return build_column_system(S, np.zeros(m - k - 2), pk, m, k)

    def test_zero_system_full_rank(self):
        sys_ = self._zero_system()
        assert np.linalg.matrix_rank(sys_.U) == sys_.U.shape[0]
        assert theorem1_check_k(sys_)

    def test_quadratic_fails_when_values_too_large(self):
        m, k = 10, 2
        U = np.vstack([np.ones(4) * 0.5, [1, -1, 0, 0], np.ones(4)])
        sys_ = ColumnKSystem(U=U, v=np.zeros(3), rhs_quad=m - 1.2 * m, k=k, m=m)
        verdict = theorem1_check_k(sys_)
        assert not verdict and verdict.failed_condition is FailedCondition.QUADRATIC_FORM

    def test_inconsistent_rank(self):
        U = np.array([[1.0, 1.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.0], [1.0, 1.0, 1.0, 1.0]])
        sys_ = ColumnKSystem(U=U, v=np.array([1.0, 2.0, 0.0]), rhs_quad=5.0, k=2, m=10)
        verdict = theorem1_check_k(sys_)
        assert not verdict and verdict.failed_condition is FailedCondition.RANK
        with pytest.raises(NotAdmissible):
            solve_column_k(sys_)

    def test_sign_choices_give_distinct_valid_solutions(self):
        sys_ = self._zero_system(m=10, k=2, pk=0.2)
        y_pos = solve_column_k(sys_, "positive")
        y_neg = solve_column_k(sys_, "negative")
        assert not np.allclose(y_pos, y_neg)
        for y in (y_pos, y_neg):
            assert np.max(np.abs(sys_.U @ y - sys_.v)) < 1e-9
            assert abs(y @ y - sys_.rhs_quad) < 1e-9

    def test_zero_margin_gives_unique_solution(self):
        # U y = v with the minimum-norm solution exactly on the sphere
        U = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 1.0]])
        v = np.array([1.0, 1.0, 0.0])
        sys_ = ColumnKSystem(U=U, v=v, rhs_quad=2.0, k=2, m=6)
        verdict = theorem1_check_k(sys_)
        assert verdict and abs(verdict.margin) < 1e-12
        np.testing.assert_allclose(solve_column_k(sys_, "positive"), solve_column_k(sys_, "negative"),
                                   atol=1e-7)

    @given(st.integers(0, 2**32 - 1))
    def test_solutions_satisfy_system(self, seed):
        rng = np.random.default_rng(seed)
        sys_ = random_column_system(rng)
        assume(sys_ is not None)
        verdict, y = try_column_k(sys_, "random", rng)
        assume(bool(verdict))
        scale = max(1.0, sys_.rhs_quad, float(np.linalg.norm(sys_.v)))
        assert np.max(np.abs(sys_.U @ y - sys_.v)) < 1e-8 * scale
        assert abs(y @ y - sys_.rhs_quad) < 1e-8 * scale

    def test_rank_deficient_solution(self):
        U = np.array([[1.0, 1.0, 1.0, 0.5], [2.0, 2.0, 2.0, 1.0], [1.0, 1.0, 1.0, 1.0]])
        v = U @ np.array([0.1, -0.2, 0.3, 0.05])
        sys_ = ColumnKSystem(U=U, v=v, rhs_quad=3.0, k=2, m=10)
        y = solve_column_k(sys_, "random", np.random.default_rng(1))
        np.testing.assert_allclose(U @ y, v, atol=1e-10)
        assert y @ y == pytest.approx(3.0)


class TestZeroValueCheck:
    def test_zero_target(self):
        m = 100
        s = solve_column1(Column1Coefficients(0.0, m, 0.0))
        assert all(zero_value_check(np.zeros(5), m, s))

    def test_column1_boundary(self):
        m = 24
        p = np.array([math.sqrt(m / 6), 0.0])
        s = solve_column1(Column1Coefficients(0.0, m, m * p[0]))
        assert zero_value_check(p, m, s)[0]

    def test_assumption_violation(self):
        with pytest.raises(AssumptionViolated):
            zero_value_check(np.zeros(3), 6, np.zeros(3))

    def test_agrees_with_general_check(self, rng):
        agree = checked = 0
        for _ in range(400):
            n = int(rng.integers(2, 5))
            m = int(rng.integers(n + 2, 30))
            p = rng.normal(0, 0.6, n)
            coef = Column1Coefficients(0.0, m, m * p[0])
            if not lemma1_check(coef):
                continue
            s1 = solve_column1(coef)
            try:
                quick = zero_value_check(p, m, s1)
            except AssumptionViolated:
                continue
            S = np.zeros((m, n))
            S[:3, 0] = s1
            for k in range(2, n + 1):
                sys_ = build_column_system(S[:, : k - 1], np.zeros(m - k - 2), p[k - 1], m, k)
                verdict = theorem1_check_k(sys_)
                if k == 2:
                    checked += 1
                    agree += bool(verdict) == quick[1]
                break
        assert checked > 50 and agree == checked


class TestSolveAll:
    def test_zero_target_zero_values(self):
        res = solve_all_columns(np.zeros(3), 20, ZeroSource())
        assert res.attempts == [1, 1, 1]
        assert validate_scaled_L(res.S)

    def test_case2_bootstrap(self, rng):
        p = np.array([0.24, -0.61, 0.04])
        hist = rng.standard_t(5, size=(720, 3))
        hist = (hist - hist.mean(0)) / hist.std(0)
        res = solve_all_columns(p, 500, BootstrapSource(hist, sigma=np.sqrt(0.7)), rng=rng)
        assert validate_scaled_L(res.S)
        assert np.max(column_residuals(res.S, p)) < 1e-6

    def test_rotated_skewness_reproduced(self, rng):
        tau = rng.uniform(-1, 1, 4)
        p = rotate_skewness(tau, rotation_matrix(4))
        res = solve_all_columns(p, 40, ParametricSource(Normal(), sigma=0.6), rng=rng)
        S = res.S
        got = (S[:, 0] ** 2) @ S / S.shape[0]
        np.testing.assert_allclose(got, p, atol=1e-6)

    def test_exhaustion_rate_single_attempt(self):
        p = np.zeros(5)
        source = ParametricSource(Normal(), sigma=math.sqrt(0.9))
        fails = 0
        for seed in range(200):
            try:
                solve_all_columns(p, 50, source, rng=np.random.default_rng(seed), max_attempts=1)
            except AdmissibilityExhausted:
                fails += 1
        assert fails / 200 > 0.95

    def test_zero_source_fails_fast(self):
        with pytest.raises(AdmissibilityExhausted) as info:
            solve_all_columns(np.array([5.0, 0.0]), 12, ZeroSource())
        assert info.value.column == 1 and info.value.attempts == 1
