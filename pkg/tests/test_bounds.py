import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from querycode import bounds
from querycode.decoders import alg1_thresholds
from querycode.errors import DomainError
from querycode.mathcore import binary_entropy, binary_entropy_inverse, kl_bernoulli, poisson_pmf
from querycode.model import NoiseModel, Prior

D_HALF_03 = 0.12576938  # D(1/2 || 0.3) in bits, frozen from kl_bernoulli / scipy rel_entr


def brute_alg1(prior, q, d, thresholds=None):
    """Enumerate neighbour labels and observed answers on the d incident edges."""
    k = prior.k
    chan = NoiseModel(q, k).channel_matrix()
    th = alg1_thresholds(prior, q, d) if thresholds is None else thresholds
    per = []
    for u in range(k):
        err = 0.0
        for nbrs in itertools.product(range(k), repeat=d):
            w_n = math.prod(prior[v] for v in nbrs)
            if w_n == 0:
                continue
            clean = [v if v == u else 0 for v in nbrs]
            for obs in itertools.product(range(k), repeat=d):
                w = w_n * math.prod(chan[c, o] for c, o in zip(clean, obs))
                if w == 0:
                    continue
                label = 0
                for i in range(1, k):
                    if sum(1 for o in obs if o == i) >= th[i - 1]:
                        label = i
                        break
                if label != u:
                    err += w
        per.append(err)
    return sum(prior[i] * e for i, e in enumerate(per)), per


def distinct_count_pmf(n, d):
    """P(#distinct values among d uniform draws from n = j), occupancy DP."""
    pmf = np.zeros(d + 2)
    pmf[0] = 1.0
    for _ in range(d):
        new = np.zeros_like(pmf)
        j = np.arange(pmf.size)
        new += pmf * j / n
        new[1:] += pmf[:-1] * (n - j[:-1]) / n
        pmf = new
    return pmf


def and_formula_oracle(n, m, p, D):
    lam = 2 * m / n
    total = p * math.exp(-lam)
    for d in range(1, D + 1):
        pmf = distinct_count_pmf(n, d)
        inner = sum(pmf[j] * (1 - p) ** j for j in range(1, d + 1))
        total += poisson_pmf(lam, d) * inner * p
    return total


class TestSameCluster:
    def test_frozen_divergence(self):
        assert kl_bernoulli(0.5, 0.3) == pytest.approx(D_HALF_03, abs=1e-8)

    def test_sufficient(self):
        n = 10_000
        m, fail = bounds.same_cluster_sufficient(n, 0.3)
        assert m == pytest.approx(n - n * D_HALF_03 / (2 * math.log2(n)), rel=1e-9)
        assert fail == pytest.approx(D_HALF_03 / (2 * n * math.log2(n)), rel=1e-7)
        assert fail < 1e-6

    def test_limit(self):
        m, _ = bounds.same_cluster_sufficient(1000, 0.4999)
        assert m == pytest.approx(1000, abs=1e-3)

    def test_half(self):
        with pytest.raises(DomainError):
            bounds.same_cluster_sufficient(100, 0.5)
        with pytest.raises(DomainError):
            bounds.same_cluster_necessary(100, 0.5, 0.1)

    def test_necessary_value(self):
        n = 10_000
        want = n - 2.01 * n * D_HALF_03 / math.log2(n)
        assert bounds.same_cluster_necessary(n, 0.3, 0.01) == pytest.approx(want, rel=1e-8)

    def test_necessary_monotone(self):
        vals = [bounds.same_cluster_necessary(1000, 0.3, e) for e in (0.01, 0.1, 1, 10, 1e6)]
        assert all(a > b for a, b in zip(vals, vals[1:]))
        assert vals[-1] < -1e6

    @pytest.mark.parametrize("n", [100, 1000, 10_000, 10**6])
    @pytest.mark.parametrize("p", [0.05, 0.2, 0.3, 0.45, 0.7])
    def test_necessary_below_sufficient(self, n, p):
        assert bounds.same_cluster_necessary(n, p, 1e-3) < bounds.same_cluster_sufficient(n, p)[0]

    def test_majority_flip_exhaustive(self):
        for size in (1, 4, 8, 9):
            brute = sum(0.3 ** sum(v) * 0.7 ** (size - sum(v))
                        for v in itertools.product([0, 1], repeat=size) if sum(v) > size - sum(v))
            assert bounds.majority_flip_probability(size, 0.3) == pytest.approx(brute, rel=1e-12)


class TestXorRates:
    def test_denominator_at_half(self):
        assert bounds._xor_denominator(np.array(0.5), 10) == pytest.approx(1.0)

    def test_feasible_at_small_p(self):
        res = bounds.xor_achievable_rate(0.05, 10)
        assert res is not None
        rate, c = res
        assert rate == c / 10 and rate <= 1.0

    def test_grid_max_against_fine_grid(self):
        p, delta, c = 0.1, 10, 5
        beta = bounds.xor_beta(p, delta, c)
        xs = np.linspace(beta, 2 * p, 400_001)
        fine = float(np.max(bounds.xor_ratio(xs, p, delta)))
        got = bounds.xor_ensemble_condition(p, delta, c)
        assert got == pytest.approx(fine, abs=1e-9)
        assert got >= fine - 1e-12

    def test_feasibility_rule(self):
        # returned c is the first with c/delta above the max; smaller c fail
        p, delta = 0.2, 10
        rate, c = bounds.xor_achievable_rate(p, delta)
        assert rate > bounds.xor_ensemble_condition(p, delta, c)
        for smaller in range(3, c):
            worst = bounds.xor_ensemble_condition(p, delta, smaller)
            assert worst is None or smaller / delta <= worst

    def test_beta_positive(self):
        for delta in range(4, 15):
            for c in range(3, delta):
                assert bounds.xor_beta(0.2, delta, c) > 0
                assert bounds.miller_beta(delta, c) > 0

    @pytest.mark.parametrize("p", [round(0.05 * i, 2) for i in range(1, 10)])
    def test_dominates_lower_bounds(self, p):
        delta = 10
        res = bounds.xor_achievable_rate(p, delta)
        if res is None:
            return
        rate = res[0]
        assert rate >= bounds.gallager_lower_rate(p, delta)
        assert rate >= bounds.counting_lower_rate(p, delta)
        assert rate >= bounds.trivial_lower_rate(delta)

    def test_miller_structure(self):
        for delta in (7, 10):
            for p in (0.05, 0.2, 0.4):
                res = bounds.miller_rate(p, delta)
                assert res is None or 0 < res[0] < 1

    def test_domain(self):
        with pytest.raises(DomainError):
            bounds.xor_achievable_rate(0.5, 10)
        with pytest.raises(DomainError):
            bounds.xor_achievable_rate(0.2, 3)


class TestLowerBounds:
    def test_gallager_half(self):
        assert bounds.gallager_lower_rate(0.5, 10) == pytest.approx(1.0)

    def test_gallager_large_delta(self):
        assert bounds.gallager_lower_rate(0.2, 400) == pytest.approx(binary_entropy(0.2), rel=1e-12)

    def test_gallager_value(self):
        want = binary_entropy(0.2) / binary_entropy((1 + 0.6**10) / 2)
        assert bounds.gallager_lower_rate(0.2, 10) == pytest.approx(want, rel=1e-14)
        assert want == pytest.approx(0.7219280948873623 / binary_entropy(0.5030233088), rel=1e-9)
        assert bounds.gallager_lower_rate(0.2, 10) >= binary_entropy(0.2)

    @given(st.floats(0.01, 0.49), st.integers(2, 30))
    @settings(max_examples=100, deadline=None)
    def test_counting_floor(self, p, delta):
        v = bounds.counting_lower_rate(p, delta)
        assert v >= binary_entropy(p) - 1e-15

    def test_counting_vs_brute_grid(self):
        p, delta = 0.05, 4
        r = 2 * p * (1 - p)
        best = 1.0
        for i in range(1, 1000):
            rho = i / 1000
            arg = (1 - rho) * r * delta / rho
            if 0 < arg <= 0.5:
                best = max(best, (1 - rho) / binary_entropy(arg))
        assert bounds.counting_lower_rate(p, delta) == pytest.approx(binary_entropy(p) * best, rel=1e-12)

    def test_counting_above_trivial(self):
        for p in np.arange(0.05, 0.5, 0.05):
            assert bounds.counting_lower_rate(p, 10) >= bounds.trivial_lower_rate(10)

    def test_trivial(self):
        assert bounds.trivial_lower_rate(10) == 0.1


class TestDistortion:
    def test_unconstrained(self):
        assert bounds.distortion_rate_unconstrained(1.0, 0.5) == 0.0
        assert bounds.distortion_rate_unconstrained(0.0, 0.5) == 0.5
        assert bounds.distortion_rate_unconstrained(0.0, 0.2) == pytest.approx(0.2, abs=1e-12)
        assert bounds.distortion_rate_unconstrained(0.5, 0.5) == pytest.approx(0.11002786443835955, abs=1e-11)
        assert bounds.distortion_rate_unconstrained(2.0, 0.5) == 0.0

    def test_massey(self):
        assert bounds.massey_bound(0.0, 0.3) == 0.3
        assert bounds.massey_bound(binary_entropy(0.3), 0.3) == pytest.approx(0.0, abs=1e-15)
        assert bounds.massey_bound(0.5, 0.5) == 0.25

    def test_distortion_lower_reference(self):
        # independent evaluation of the correction term, nats throughout
        rate, p, delta = 0.3, 0.5, 2
        t = binary_entropy_inverse(binary_entropy(p) - rate)
        hp = math.log(2)
        ht = -(t * math.log(t) + (1 - t) * math.log(1 - t))
        slope = math.log((1 - t) / t)
        want = t + (hp - ht) / (slope * (1 + math.exp(delta * slope)))
        assert bounds.distortion_lower_thm3(rate, p, delta) == pytest.approx(want, rel=1e-12)

    @given(st.floats(0.01, 0.99), st.integers(1, 40))
    @settings(max_examples=150, deadline=None)
    def test_distortion_lower_above_unconstrained(self, rate, delta):
        assert bounds.distortion_lower_thm3(rate, 0.5, delta) >= bounds.distortion_rate_unconstrained(rate, 0.5)

    def test_distortion_lower_large_delta(self):
        assert bounds.distortion_lower_thm3(0.4, 0.5, 10_000) == bounds.distortion_rate_unconstrained(0.4, 0.5)

    def test_distortion_lower_domain(self):
        with pytest.raises(DomainError):
            bounds.distortion_lower_thm3(1.0, 0.5, 4)


class TestAndFormula:
    def test_no_queries(self):
        assert bounds.and_distortion_formula(100, 0, 0.3) == pytest.approx(0.3)

    @pytest.mark.parametrize("n,m,p", [(50, 40, 0.5), (1000, 1000, 0.5), (200, 500, 0.2)])
    def test_occupancy_oracle(self, n, m, p):
        D = bounds.poisson_truncation(2 * m / n)
        want = and_formula_oracle(n, m, p, D)
        assert bounds.and_distortion_formula(n, m, p) == pytest.approx(want, rel=1e-10)

    def test_truncation_tail(self):
        for lam in (0.5, 2.0, 8.0):
            D = bounds.poisson_truncation(lam)
            tail = 1 - sum(poisson_pmf(lam, d) for d in range(D + 1))
            assert tail < 1e-10
            assert 1 - sum(poisson_pmf(lam, d) for d in range(D)) >= 1e-10

    def test_monotone_in_m(self):
        vals = [bounds.and_distortion_formula(1000, m, 0.5) for m in range(0, 5001, 250)]
        assert all(a >= b for a, b in zip(vals, vals[1:]))
        assert vals[-1] < 0.01


class TestAlg1Exact:
    @pytest.mark.parametrize("d", [1, 2, 3, 4])
    @pytest.mark.parametrize("q", [0.0, 0.1, 0.35])
    def test_binary_brute(self, d, q):
        prior = Prior((0.5, 0.5))
        delta, per = bounds.alg1_exact_error(prior, q, d)
        want, want_per = brute_alg1(prior, q, d)
        assert delta == pytest.approx(want, abs=1e-10)
        assert per == pytest.approx(want_per, abs=1e-10)

    @pytest.mark.parametrize("d", [1, 2, 3, 4])
    def test_ternary_brute(self, d):
        prior = Prior((0.5, 0.3, 0.2))
        delta, _ = bounds.alg1_exact_error(prior, 0.1, d)
        assert delta == pytest.approx(brute_alg1(prior, 0.1, d)[0], abs=1e-10)

    def test_override_brute(self):
        prior = Prior((0.4, 0.35, 0.25))
        for th in [(1, 1), (2, 1), (0, 3)]:
            delta, _ = bounds.alg1_exact_error(prior, 0.2, 3, th)
            assert delta == pytest.approx(brute_alg1(prior, 0.2, 3, th)[0], abs=1e-10)

    def test_printed_equals_exact_binary(self):
        for q in (0.0, 0.05, 0.1, 0.3):
            for d in (4, 10, 25):
                prior = Prior((0.5, 0.5))
                assert bounds.alg1_printed_error(prior, q, d)[0] == pytest.approx(
                    bounds.alg1_exact_error(prior, q, d)[0], abs=1e-12)

    def test_printed_bounds_exact_ternary(self):
        prior = Prior((0.5, 0.3, 0.2))
        for d in (6, 12, 20):
            assert bounds.alg1_printed_error(prior, 0.1, d)[0] >= bounds.alg1_exact_error(prior, 0.1, d)[0]

    def test_noiseless_no_false_positive(self):
        prior = Prior((0.6, 0.3, 0.1))
        _, per = bounds.alg1_exact_error(prior, 0.0, 12)
        assert per[0] == 0.0

    def test_half_noise(self):
        delta, _ = bounds.alg1_exact_error(Prior((0.5, 0.5)), 0.5, 100)
        assert delta == pytest.approx(0.5, abs=0.02)

    @given(st.floats(0.05, 0.95), st.floats(0, 1), st.integers(1, 60))
    @settings(max_examples=100, deadline=None)
    def test_probabilities_in_range(self, p, q, d):
        delta, per = bounds.alg1_exact_error(Prior.binary(p), q, d)
        assert 0 <= delta <= 1
        assert all(0 <= e <= 1 for e in per)


class TestTargetDelta:
    def test_vacuous(self):
        choice = bounds.queries_for_target_delta(Prior((0.5, 0.5)), 0.1, 1.0)
        assert choice.d == 2 and choice.vacuous

    def test_minimal(self):
        prior = Prior((0.5, 0.5))
        for target in (0.05, 0.01, 1e-3):
            choice = bounds.queries_for_target_delta(prior, 0.1, target)
            assert choice.rate == choice.d / 2
            assert choice.d % 2 == 0
            assert bounds.alg1_exact_error(prior, 0.1, choice.d)[0] <= target
            if choice.d > 2:
                assert bounds.alg1_exact_error(prior, 0.1, choice.d - 2)[0] > target

    def test_capacity(self):
        assert bounds.queries_for_target_delta(Prior((0.5, 0.5)), 0.5, 0.1) is None

    def test_logarithmic_growth(self):
        prior = Prior((0.5, 0.5))
        for target in (0.1, 0.01, 1e-3):
            d1 = bounds.queries_for_target_delta(prior, 0.1, target).d
            d2 = bounds.queries_for_target_delta(prior, 0.1, target / 10).d
            assert d2 / d1 <= 4


class TestBoundCurve:
    def test_sorted_and_infeasible(self):
        c = bounds.BoundCurve("x", ((0.2, 1.0, True), (0.1, None, False)))
        assert c.abscissae == [0.1, 0.2]
        assert math.isnan(c.values[0])

    def test_non_finite_feasible_rejected(self):
        with pytest.raises(DomainError):
            bounds.BoundCurve("x", ((0.1, math.inf, True),))

    def test_tabulate(self):
        c = bounds.tabulate("g", lambda p: None if p > 0.3 else p, [0.1, 0.4])
        assert [r[2] for r in c.rows] == [True, False]
