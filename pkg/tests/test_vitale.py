import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate
from scipy.sparse.csgraph import floyd_warshall

from fbm_maxloss.bounds import comparison_distance
from fbm_maxloss.core import covariance
from fbm_maxloss.errors import RegimeError, SizeError, ValidationError
from fbm_maxloss.vitale import (
    build_increment_family,
    expected_max_comonotone,
    expected_max_independent,
    maximize_idd,
    maximize_pddd,
    metric_closure,
    vitale_lower_bound,
)

INV_SQRT_2PI = 0.3989422804014327


def brute_dist_sq(family):
    """E[(X_p - X_q)^2] as a quadratic form in the grid covariance matrix."""
    n = family.grid.n_steps
    t = family.grid.points()
    cov = covariance(t[:, None], t[None, :], family.h)
    weights = np.zeros((family.size, n + 1))
    for p, (i, j) in enumerate(family.members):
        if j:
            weights[p, i] += 1.0
            weights[p, i - j] -= 1.0
    diff = weights[:, None, :] - weights[None, :, :]
    return np.einsum("pqa,ab,pqb->pq", diff, cov, diff)


class TestIncrementFamily:
    @pytest.mark.parametrize("h", [0.5, 0.8])
    def test_single_step(self, h):
        fam = build_increment_family(1, h)
        assert fam.members == [(0, 0), (1, 1)]
        assert np.allclose(fam.dist_sq, [[0, 1], [1, 0]], rtol=1e-15)

    def test_disjoint_brownian_increments(self):
        fam = build_increment_family(2, 0.5)
        p, q = fam.members.index((1, 1)), fam.members.index((2, 1))
        assert fam.dist_sq[p, q] == pytest.approx(1.0, rel=1e-14)

    @pytest.mark.parametrize("n", [1, 3, 5, 8])
    def test_structure(self, n):
        fam = build_increment_family(n, 0.65)
        assert fam.size == n * (n + 1) // 2 + 1
        assert np.array_equal(fam.dist_sq, fam.dist_sq.T)
        assert np.all(np.diag(fam.dist_sq) == 0)
        assert np.all(fam.dist_sq >= 0)
        assert np.array_equal(fam.dist_sq[0], fam.variances)
        d = fam.grid.step
        assert np.allclose(fam.variances[1:], [(j * d) ** 1.3 for _, j in fam.members[1:]], rtol=1e-14)

    @pytest.mark.parametrize("h", [0.5, 0.6, 0.7, 0.75, 0.9])
    def test_matches_comparison_distance(self, h):
        fam = build_increment_family(5, h)
        d = fam.grid.step
        ends = [(i * d, (i - j) * d) for i, j in fam.members]
        for p in range(fam.size):
            for q in range(fam.size):
                assert fam.dist_sq[p, q] == pytest.approx(comparison_distance(*ends[p], *ends[q], h), abs=1e-12)

    @pytest.mark.parametrize("h", [0.5, 0.75])
    def test_matches_quadratic_form(self, h):
        fam = build_increment_family(6, h)
        assert np.max(np.abs(fam.dist_sq - brute_dist_sq(fam))) < 1e-12

    def test_size_limit(self):
        with pytest.raises(SizeError):
            build_increment_family(201, 0.7)
        with pytest.raises(ValidationError):
            build_increment_family(0, 0.7)


class TestComonotone:
    def test_half_normal(self):
        assert expected_max_comonotone([0.0, 2.5]) == pytest.approx(2.5 * INV_SQRT_2PI, rel=1e-15)

    def test_constant_without_zero_member(self):
        assert expected_max_comonotone([1.3, 1.3, 1.3]) == 0.0

    def test_example(self):
        assert expected_max_comonotone([-1.0, 0.0, 2.0]) == pytest.approx(1.1968268412042980, rel=1e-15)

    def test_monte_carlo(self):
        a = np.array([-1.0, 0.0, 2.0])
        z = np.random.default_rng(0).standard_normal(10**6)
        sample = np.maximum(np.maximum(-z, 0.0), 2 * z)
        se = sample.std() / math.sqrt(z.size)
        assert abs(sample.mean() - expected_max_comonotone(a)) < 4 * se

    @given(st.lists(st.floats(-5, 5), min_size=1, max_size=12))
    @settings(max_examples=40, deadline=None)
    def test_quadrature_agrees(self, a):
        assert expected_max_comonotone(a, "quadrature") == pytest.approx(expected_max_comonotone(a), abs=1e-8)


class TestIndependent:
    def test_half_normal(self):
        assert expected_max_independent([0.0, 1.7]) == pytest.approx(1.7 * INV_SQRT_2PI, abs=1e-8)

    def test_degenerate(self):
        assert expected_max_independent([0.0]) == 0.0
        assert expected_max_independent([0.0, 0.0, 0.0]) == 0.0

    def test_two_standard_normals(self):
        assert expected_max_independent([1.0, 1.0]) == pytest.approx(1 / math.sqrt(math.pi), abs=1e-7)

    def test_rejects_negative(self):
        with pytest.raises(ValidationError):
            expected_max_independent([1.0, -0.1])

    def test_against_scipy_quad(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            s = rng.uniform(0.05, 2.0, int(rng.integers(2, 30)))
            from scipy.stats import norm

            f = lambda y: 1 - np.prod(norm.cdf(y / s)) - np.prod(norm.cdf(-y / s))
            oracle = integrate.quad(f, 0, 12 * s.max(), epsabs=1e-12, limit=200)[0]
            assert expected_max_independent(s) == pytest.approx(oracle, abs=1e-8)

    def test_monte_carlo(self):
        rng = np.random.default_rng(6)
        s = np.array([0.0, 0.3, 0.9, 1.4, 0.2])
        sample = (rng.standard_normal((10**6, s.size)) * s).max(axis=1)
        se = sample.std() / 1e3
        assert abs(sample.mean() - expected_max_independent(s)) < 4 * se

    @given(
        st.lists(st.floats(0.0, 3.0), min_size=1, max_size=10),
        st.integers(0, 9),
        st.floats(0.0, 1.0),
    )
    @settings(max_examples=60, deadline=None)
    def test_monotone_in_each_coordinate(self, s, k, bump):
        s = np.array(s)
        k %= s.size
        bigger = s.copy()
        bigger[k] += bump
        assert expected_max_independent(bigger) >= expected_max_independent(s) - 2e-8


class TestMetricClosure:
    def test_matches_scipy_floyd_warshall(self):
        rng = np.random.default_rng(3)
        w = rng.uniform(0.1, 5.0, (40, 40))
        w = np.minimum(w, w.T)
        assert np.allclose(metric_closure(w), floyd_warshall(w, directed=False), rtol=1e-14)


class TestPddd:
    def test_single_increment(self):
        fam, bound = maximize_pddd(build_increment_family(1, 0.7))
        assert bound == pytest.approx(INV_SQRT_2PI, rel=1e-14)
        assert fam.coefficients[0] == 0.0

    @pytest.mark.parametrize("n, h", [(3, 0.5), (6, 0.7), (10, 0.9)])
    def test_feasible_and_dominates_single_pairs(self, n, h):
        family = build_increment_family(n, h)
        fam, bound = maximize_pddd(family)
        assert fam.feasibility_residual(family) <= 1e-10
        assert fam.coefficients[0] == 0.0
        assert bound >= math.sqrt(family.variances.max()) * INV_SQRT_2PI - 1e-15
        assert bound == pytest.approx(expected_max_comonotone(fam.coefficients), rel=1e-14)

    def test_optimal_for_range_objective(self):
        # no feasible vector beats the largest pairwise distance
        family = build_increment_family(4, 0.8)
        _, bound = maximize_pddd(family)
        assert bound * math.sqrt(2 * math.pi) == pytest.approx(math.sqrt(family.dist_sq.max()), rel=1e-12)


class TestIdd:
    def test_single_increment(self):
        fam, bound, _ = maximize_idd(build_increment_family(1, 0.6))
        assert np.allclose(fam.std_devs, [0.0, 1.0], atol=1e-15)
        assert bound == pytest.approx(INV_SQRT_2PI, abs=1e-8)

    @pytest.mark.parametrize("n, h", [(2, 0.5), (5, 0.5), (7, 0.75), (12, 0.9)])
    def test_feasible_and_coordinate_maximal(self, n, h):
        family = build_increment_family(n, h)
        fam, bound, sweeps = maximize_idd(family)
        assert fam.feasibility_residual(family) <= 1e-10
        assert fam.std_devs[0] == 0.0
        s2 = fam.std_devs**2
        d = family.dist_sq + np.diag(np.full(family.size, np.inf))
        slack = np.min(d - s2[None, :], axis=1) - s2
        assert np.all(slack[1:] <= 1e-12)
        assert 1 <= sweeps <= 100
        # start point of the ascent
        start = 0.5 * d.min(axis=1)
        start[0] = 0
        assert bound >= expected_max_independent(np.sqrt(start)) - 1e-8


@pytest.mark.parametrize("n, h", [(3, 0.5), (5, 0.7), (8, 0.9)])
def test_scale_equivariance(n, h):
    family = build_increment_family(n, h)
    scaled = family.scaled(2.0)
    assert maximize_pddd(scaled)[1] == pytest.approx(2 * maximize_pddd(family)[1], rel=1e-12)
    assert maximize_idd(scaled)[1] == pytest.approx(2 * maximize_idd(family)[1], abs=1e-7)


class TestVitaleLowerBound:
    def test_single_increment(self):
        res = vitale_lower_bound(1, 0.5)
        assert res.idd_bound == pytest.approx(INV_SQRT_2PI, abs=1e-8)
        assert res.pddd_bound == pytest.approx(INV_SQRT_2PI, rel=1e-14)
        labels = [e.label for e in res.entries()]
        assert labels == ["IDD(1)", "PDDD(1)"]

    @pytest.mark.parametrize("n", [2, 5, 10])
    @pytest.mark.parametrize("h", [0.5, 0.7, 0.9])
    def test_below_upper_bound(self, n, h):
        res = vitale_lower_bound(n, h)
        assert res.idd_bound <= 2 / math.sqrt(math.pi)
        assert res.pddd_bound <= 2 / math.sqrt(math.pi)
        assert res.idd_residual <= 1e-10 and res.pddd_residual <= 1e-10

    def test_regime(self):
        with pytest.raises(RegimeError):
            vitale_lower_bound(5, 0.3)
