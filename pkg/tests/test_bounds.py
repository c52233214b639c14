import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from smoothnet.bounds import (
    BoundReport, apply_matching, ccc_lower_bound, ccc_product_entry, compute_lambda1,
    empirical_bounds, lambda_offones, matching_matrix, periodic_bound, product_matrix,
    product_matrix_scaled, theorem1_bound,
)
from smoothnet.engine import run_ideal
from smoothnet.network import Matching, MatchingSchedule, ScheduleError, build_ccc, random_perfect_round
from smoothnet.verification import random_schedule


def dense_matrix(m, n):
    P = np.eye(n)
    for a, b in zip(m.u.tolist(), m.v.tolist()):
        P[a, a] = P[b, b] = P[a, b] = P[b, a] = 0.5
    return P


def dense_product(schedule, start, stop):
    A = np.eye(schedule.n)
    for i in range(start, stop + 1):
        A = A @ dense_matrix(schedule[i], schedule.n)
    return A


def lambda1_oracle(schedule, t1, t2):
    """max over wires of sqrt(log n * sum_{i<=t1} sum_{(u,v)} (P[i+1,t2]_{u,w} - P[i+1,t2]_{v,w})^2)."""
    n = schedule.n
    best = 0.0
    for w in range(n):
        acc = 0.0
        for i in range(1, t1 + 1):
            P = dense_product(schedule, i + 1, t2)
            m = schedule[i]
            acc += float(np.sum((P[m.u, w] - P[m.v, w]) ** 2))
        best = max(best, acc)
    return math.sqrt(math.log2(n) * best)


class TestMatrices:
    def test_two_wire_matrix(self):
        P = matching_matrix(Matching(1, [0], [1]), 2)
        assert np.array_equal(P, [[0.5, 0.5], [0.5, 0.5]])

    def test_unmatched_vertex_keeps_load(self):
        P = matching_matrix(Matching(1, [0], [1]), 3, exact=True)
        assert P[2, 2] == 1 and P[0, 1] == Fraction(1, 2) and P[0, 2] == 0

    def test_empty_matching_is_identity(self):
        assert np.array_equal(matching_matrix(Matching(1, [], []), 4), np.eye(4))

    def test_apply(self):
        assert apply_matching([0, 3], Matching(1, [0], [1])).tolist() == [1.5, 1.5]

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(2, 12), st.integers(1, 6))
    def test_products_agree_with_oracle(self, seed, n, T):
        s = random_schedule(n, T, np.random.default_rng(seed))
        ref = dense_product(s, 1, T)
        assert np.allclose(product_matrix(s), ref, atol=1e-12)
        S, e = product_matrix_scaled(s)
        assert np.allclose(S / 2.0**e, ref, atol=1e-12)
        for m in s:
            P = matching_matrix(m, n)
            assert np.allclose(P, P.T) and np.allclose(P.sum(axis=0), 1) and np.allclose(P.sum(axis=1), 1)
            x = np.random.default_rng(seed).normal(size=n)
            assert np.abs(x @ P).max() <= np.abs(x).max() + 1e-12


class TestLambda:
    def test_known_values(self):
        assert lambda_offones(np.eye(5)) == pytest.approx(1.0)
        assert lambda_offones(matching_matrix(Matching(1, [0], [1]), 2)) == pytest.approx(0.0, abs=1e-15)
        assert lambda_offones(build_ccc(6)) <= 1e-9

    def test_rejects_non_stochastic(self):
        with pytest.raises(ValueError):
            lambda_offones(np.array([[1.0, 1.0], [0.0, 1.0]]))
        with pytest.raises(ValueError):
            lambda_offones(build_ccc(3), 2, 4)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(2, 10), st.integers(1, 8))
    def test_nested_products_do_not_grow(self, seed, n, T):
        s = random_schedule(n, T, np.random.default_rng(seed))
        lams = [lambda_offones(s, 1, t) for t in range(1, T + 1)]
        assert all(b <= a + 1e-9 for a, b in zip(lams, lams[1:]))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(2, 12), st.integers(1, 8))
    def test_contraction_of_ideal_process(self, seed, n, T):
        rng = np.random.default_rng(seed)
        s = random_schedule(n, T, rng)
        x0 = rng.integers(0, 50, size=n)
        xt = run_ideal(s, x0, mode="float")
        mu = x0.mean()
        lhs = np.linalg.norm(xt - mu)
        assert lhs <= lambda_offones(s) * np.linalg.norm(x0 - mu) + 1e-9

    def test_power_iteration_matches_svd(self):
        import smoothnet.bounds as b
        rng = np.random.default_rng(3)
        s = MatchingSchedule(128, random_perfect_round(128, 3, rng))
        assert b._lambda_power(s, 1, 3) == pytest.approx(b._lambda_dense(product_matrix(s)), rel=1e-6)

    def test_large_schedule_uses_matrix_free_path(self):
        assert lambda_offones(build_ccc(11)) <= 1e-9
        assert lambda_offones(build_ccc(11), 1, 10) == pytest.approx(1.0, abs=1e-9)


class TestLambda1:
    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(2, 10), st.integers(2, 7), st.data())
    def test_sweep_matches_dense_definition(self, seed, n, T, data):
        s = random_schedule(n, T, np.random.default_rng(seed))
        t2 = data.draw(st.integers(2, T))
        t1 = data.draw(st.integers(1, t2 - 1))
        assert compute_lambda1(s, t1, t2) == pytest.approx(lambda1_oracle(s, t1, t2), abs=1e-9)

    def test_n16_ccc_against_dense(self):
        s = build_ccc(4)
        assert compute_lambda1(s, 2, 4, wire=0) == pytest.approx(lambda1_oracle(s, 2, 4), abs=1e-12)
        assert compute_lambda1(s, 2, 4) == pytest.approx(math.sqrt(1.5), abs=1e-12)

    @pytest.mark.parametrize("log_n", [4, 8, 12])
    def test_ccc_closed_form(self, log_n):
        n = 1 << log_n
        t1 = log_n - int(math.log2(log_n))
        value = compute_lambda1(build_ccc(log_n), t1, log_n)
        # each layer i <= t1 contributes exactly 2**i / n
        assert value == pytest.approx(math.sqrt(log_n * (2 ** (t1 + 1) - 2) / n), rel=1e-12)
        assert value <= 4 * math.sqrt(2)

    def test_empty_prefix(self):
        s = MatchingSchedule(4, [Matching(1, [], []), Matching(2, [0, 2], [1, 3])])
        assert compute_lambda1(s, 1, 2) == 0.0
        assert compute_lambda1(build_ccc(3), 0, 3) == 0.0

    def test_range_errors(self):
        with pytest.raises(ValueError):
            compute_lambda1(build_ccc(3), 3, 3)
        with pytest.raises(ValueError):
            compute_lambda1(build_ccc(3), 1, 3, wire=8)


class TestMainBound:
    def test_n16_alpha0(self):
        r = theorem1_bound(build_ccc(4), 0.0, 2, 4, 16)
        assert r.main_terms == 5.0
        assert r.lambda2_term == pytest.approx(0.0, abs=1e-9)
        assert r.total == pytest.approx(5.0 + math.sqrt(1.5), abs=1e-9)

    def test_random_alpha_half(self):
        log_n = 10
        r = theorem1_bound(build_ccc(log_n), 0.5, log_n - 4, log_n, 1000)
        assert r.main_terms == 4.0
        assert r.total <= 4 + 4 * math.sqrt(2)

    def test_degenerate_t1_zero(self):
        s = build_ccc(3)
        r = theorem1_bound(s, 0.5, 0, 2, 10)
        assert r.total == pytest.approx(2 + lambda_offones(s, 1, 2) * math.sqrt(8) * 10)

    def test_serialization(self):
        r = theorem1_bound(build_ccc(3), 0.25, 1, 3, 8)
        header = BoundReport.csv_header().split(",")
        assert header[0] == "n" and header[-1] == "total"
        assert len(r.to_csv_row().split(",")) == len(header)
        assert "total=" in r.to_kv()

    def test_errors(self):
        with pytest.raises(ValueError):
            theorem1_bound(build_ccc(3), 0.0, 2, 4, 1)
        with pytest.raises(ValueError):
            theorem1_bound(build_ccc(3), 0.0, 1, 3, -1)


class TestPeriodic:
    def test_single_matching_on_two_wires(self):
        pb = periodic_bound([Matching(1, [0], [1])], 0.5, 4)
        assert pb.lambda_q == pytest.approx(0.0, abs=1e-12)
        assert pb.T == math.ceil(2 * math.log2(8))

    @pytest.mark.parametrize("seed", range(3))
    def test_caps_hold_on_random_rounds(self, seed):
        rnd = random_perfect_round(64, 4, np.random.default_rng(seed))
        pb = periodic_bound(rnd, 0.25, 64)
        assert pb.T % 4 == 0
        assert pb.report.lambda1_term <= pb.lambda1_cap
        assert pb.report.lambda2_term <= pb.lambda2_cap < 1

    def test_disconnected_round(self):
        with pytest.raises(ValueError):
            periodic_bound([Matching(1, [0, 2], [1, 3])], 0.0, 4)

    def test_bad_parameters(self):
        with pytest.raises(ValueError):
            periodic_bound([Matching(1, [0], [1])], 0.0, 0.5)
        with pytest.raises(ScheduleError):
            periodic_bound([], 0.0, 2)


class TestFormulas:
    def test_ccc_lower(self):
        assert ccc_lower_bound(30, 0.0) == pytest.approx(15 - 2 * math.log2(30))
        assert ccc_lower_bound(30, 0.0) == pytest.approx(5.19, abs=0.01)
        assert ccc_lower_bound(16, 0.0) == pytest.approx(2.0)
        assert ccc_lower_bound(16, 0.5) == pytest.approx(2.0)
        with pytest.raises(ValueError):
            ccc_lower_bound(1, 0.0)

    def test_empirical(self):
        assert empirical_bounds(30, 0.0) == pytest.approx((15.0, 21.5))
        lo, hi = empirical_bounds(16, 0.5)
        assert hi == 8.0 and lo == pytest.approx(1.5 * (1 - 2**-16))
        assert empirical_bounds(16, 0.0) == pytest.approx((8.0, 14.0))

    def test_product_entry_small_cases(self):
        assert all(ccc_product_entry(3, 1, u, v) == Fraction(1, 8) for u in range(8) for v in range(8))
        for u in range(8):
            for v in range(8):
                assert ccc_product_entry(3, 4, u, v) == (1 if u == v else 0)
        assert ccc_product_entry(3, 2, 1, 2) == Fraction(1, 4)
        assert ccc_product_entry(3, 2, 1, 5) == 0
        with pytest.raises(ValueError):
            ccc_product_entry(3, 0, 0, 0)

    @pytest.mark.parametrize("log_n", [1, 2, 3, 4, 5, 6])
    def test_product_entry_against_exact_product(self, log_n):
        s = build_ccc(log_n)
        n = s.n
        for k in range(1, log_n + 2):
            P = np.empty((n, n), dtype=object)
            P[:] = Fraction(0)
            for i in range(n):
                P[i, i] = Fraction(1)
            for i in range(k, log_n + 1):
                P = P.dot(matching_matrix(s[i], n, exact=True))
            for u in range(n):
                for v in range(n):
                    assert P[u, v] == ccc_product_entry(log_n, k, u, v)
