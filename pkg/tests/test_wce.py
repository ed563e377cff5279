import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from anovaqmc._cells import cell_integral
from anovaqmc.core import PointSet, SubsetId, Weights, project
from anovaqmc.discrepancy import lp_discrepancy
from anovaqmc.oracle import quadrature_oracle
from anovaqmc.pointsets import hammersley_2d, midpoint_1d, random_pointset
from anovaqmc.wce import kappa2, kernel, kernel_sum, kernel_sum_via_discrepancy, wce

PSTARS = [1, 1.5, 2, 3, 7, "inf"]


def midpoint_value(n, p, gamma=1.0):
    p = float(p)
    return gamma / (2.0 * n) if math.isinf(p) else gamma / (2.0 * (p + 1.0) ** (1.0 / p) * n)


def kappa2_by_quadrature(x, y):
    """Gauss-Legendre on the polynomial pieces between the breakpoints x, y."""
    nodes, weights = np.polynomial.legendre.leggauss(8)
    edges = sorted({0.0, x, y, 1.0})
    total = 0.0
    for a, b in zip(edges, edges[1:]):
        t = (a + b) / 2 + (b - a) / 2 * nodes
        f = np.where(x >= t, t, t - 1) * np.where(y >= t, t, t - 1)
        total += (b - a) / 2 * float(f @ weights)
    return total


class TestKernel:
    @pytest.mark.parametrize("x,t,expected", [(0.7, 0.3, 0.3), (0.2, 0.6, -0.4), (0.5, 0.5, 0.5)])
    def test_branches(self, x, t, expected):
        assert kernel(x, t) == pytest.approx(expected, abs=1e-16)

    @given(st.floats(0, 1), st.floats(0, 1))
    def test_indicator_form(self, x, t):
        assert kernel(x, t) == t - (1.0 if x < t else 0.0)
        assert abs(kernel(x, t)) <= 1


class TestKernelSum:
    def test_midpoint_two(self):
        assert kernel_sum(midpoint_1d(2), 1, [0.5]) == 0.0

    def test_single_point(self):
        assert kernel_sum(PointSet([[0.5, 0.5]]), 3, [0.25, 0.25]) == 0.0625

    def test_zero_coordinate(self, rng):
        P = PointSet(rng.random((5, 3)))
        assert kernel_sum(P, 0b111, [0.3, 0.0, 0.8]) == 0.0

    def test_empty_subset_rejected(self):
        with pytest.raises(ValueError):
            kernel_sum(midpoint_1d(2), 0, [])

    @given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(1, 64))
    def test_identity_property(self, seed, d, n):
        rng = np.random.Generator(np.random.PCG64(seed))
        P = PointSet(rng.random((n, d)))
        u = SubsetId(int(rng.integers(1, 1 << d)))
        t = rng.random(len(u))
        assert abs(kernel_sum(P, u, t) - kernel_sum_via_discrepancy(P, u, t)) <= 1e-12

    @given(st.integers(0, 2**32 - 1), st.floats(0, 1))
    def test_one_dimensional_reduction(self, seed, t):
        rng = np.random.Generator(np.random.PCG64(seed))
        X = rng.random(int(rng.integers(1, 30)))
        P = PointSet(X[:, None])
        direct = len(X) * t - np.count_nonzero(X < t)
        assert kernel_sum_via_discrepancy(P, 1, [t]) == pytest.approx(direct, abs=1e-12)
        assert kernel_sum(P, 1, [t]) == pytest.approx(direct, abs=1e-12)

    def test_all_ones(self, rng):
        P = PointSet(rng.random((8, 3)))
        assert kernel_sum(P, 0b111, [1, 1, 1]) == 0.0
        assert kernel_sum_via_discrepancy(P, 0b111, [1, 1, 1]) == pytest.approx(0.0, abs=1e-14)


class TestKappa2:
    def test_against_piecewise_quadrature(self, rng):
        for x, y in rng.random((50, 2)):
            assert abs(float(kappa2(x, y)) - kappa2_by_quadrature(x, y)) <= 1e-12

    def test_symmetric(self, rng):
        x, y = rng.random(2)
        assert kappa2(x, y) == kappa2(y, x)


class TestWceExactPaths:
    @pytest.mark.parametrize("p", PSTARS)
    @pytest.mark.parametrize("n", [1, 2, 4, 9, 64])
    def test_midpoint(self, n, p):
        rep = wce(midpoint_1d(n), Weights.product([1.0]), p)
        assert rep.total == pytest.approx(midpoint_value(n, p), rel=1e-12)
        assert rep.tolerance == 0.0

    def test_midpoint_four_value(self):
        assert wce(midpoint_1d(4), Weights.product([1.0]), 2).total == pytest.approx(0.0721688, abs=1e-7)

    @pytest.mark.parametrize("p", [1, 2, 3, "inf"])
    def test_one_dimensional_is_discrepancy(self, p, rng):
        P = PointSet(rng.random((13, 1)))
        rep = wce(P, Weights.product([0.6]), p)
        assert rep.total == pytest.approx(0.6 * lp_discrepancy(P, p)[0], rel=1e-12)

    @pytest.mark.parametrize("x", [0.0, 0.25, 0.5, 1 - 2**-10])
    def test_single_point_sup(self, x):
        assert wce(PointSet([[x]]), Weights.product([1.0]), "inf").total == max(x, 1 - x)

    def test_node_at_one(self):
        # K(1, t) = t, so the kernel sum is t itself
        assert wce(PointSet([[1.0]]), Weights.product([1.0]), 2).total == pytest.approx(1 / math.sqrt(3))

    @pytest.mark.parametrize("seed", [0, 1])
    def test_l2_matches_oracle_3d(self, seed):
        P = random_pointset(3, 16, seed)
        w = Weights.product([1.0, 1 / 4, 1 / 9])
        oracle = quadrature_oracle(P, w, 2, 32, extrapolate=True)
        assert abs(wce(P, w, 2).total - oracle) <= 1e-6

    @pytest.mark.parametrize("d,n,seed", [(2, 32, 3), (3, 12, 4), (3, 32, 5)])
    def test_l2_closed_form_vs_cell_quadrature(self, d, n, seed):
        P = random_pointset(d, n, seed)
        w = Weights.uniform(d, 0.7)
        tol = 1e-9
        total = err = 0.0
        for u in w.active():
            r = cell_integral(project(P, u).points, "kernel", 2.0, tol / len(w.active()))
            total += w[u] ** 2 * r.value
            err += w[u] ** 2 * r.error
        quad = math.sqrt(total)
        assert abs(wce(P, w, 2).total - quad) <= err / quad + 1e-12

    def test_sup_for_three_coordinates(self, rng):
        P = PointSet(rng.random((4, 3)))
        rep = wce(P, Weights.single(3, 0b111), "inf")
        t = (np.arange(33) + 0.5) / 33
        grid = np.stack(np.meshgrid(t, t, t, indexing="ij"), -1).reshape(-1, 3)
        dense = max(abs(kernel_sum(P, 0b111, g)) for g in grid) / P.n
        assert rep.total >= dense - 1e-15
        assert rep.total <= 1.0


class TestWceQuadrature:
    @pytest.mark.parametrize("p", [1, 1.5, 3])
    def test_against_oracle_2d(self, p):
        P = random_pointset(2, 10, 7)
        w = Weights.uniform(2)
        rep = wce(P, w, p, 1e-10)
        # |S| has kinks at its zero set, which the extrapolated rule does not
        # resolve; a finer plain grid does
        oracle = quadrature_oracle(P, w, p, 2048) if p == 1 else quadrature_oracle(P, w, p, 256, extrapolate=True)
        assert rep.method == "quadrature"
        assert abs(rep.total - oracle) <= max(rep.tolerance, 1e-7)

    def test_tolerance_is_reported(self):
        rep = wce(random_pointset(2, 8, 1), Weights.uniform(2), 1.5, 1e-8)
        assert 0 < rep.tolerance <= 1e-8


class TestReport:
    @pytest.mark.parametrize("p", [1.5, 2, 3])
    def test_total_is_root_of_terms(self, p, rng):
        P = PointSet(rng.random((6, 2)))
        rep = wce(P, Weights.product([0.5, 0.8]), p, 1e-9)
        assert rep.total == pytest.approx(sum(rep.per_subset.values()) ** (1 / p), rel=1e-14)
        assert set(rep.per_subset) == {1, 2, 3}

    def test_infinity_total_is_max(self, rng):
        P = PointSet(rng.random((6, 2)))
        rep = wce(P, Weights.product([0.5, 0.8]), "inf")
        assert rep.total == max(rep.per_subset.values())
        assert rep.per_subset[rep.argmax()] == rep.total

    @pytest.mark.parametrize(
        "d,p,method",
        [(1, "inf", "exact_grid_sup"), (2, "inf", "exact_grid_sup"), (2, 2, "exact_closed_form"),
         (1, 3, "exact_closed_form"), (2, 3, "quadrature")],
    )
    def test_method_tags(self, d, p, method):
        rep = wce(random_pointset(d, 5, 0), Weights.uniform(d), p, 1e-8)
        assert rep.method == method

    def test_one_coordinate_terms_are_exact(self):
        rep = wce(random_pointset(2, 5, 0), Weights.uniform(2), 3, 1e-8)
        assert rep.subset_methods == {1: "exact_closed_form", 2: "exact_closed_form", 3: "quadrature"}

    def test_no_active_weights(self):
        rep = wce(random_pointset(2, 5, 0), Weights.from_mapping(2, {}), 2)
        assert rep.total == 0.0 and rep.per_subset == {}

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            wce(midpoint_1d(4), Weights.uniform(2), 2)


class TestWceProperties:
    @given(st.integers(0, 10_000), st.sampled_from([2, "inf", 3]), st.floats(0.1, 10))
    def test_homogeneous(self, seed, p, c):
        P = random_pointset(2, 5, seed)
        w = Weights.product([0.3, 0.6])
        a, b = wce(P, w, p, 1e-10), wce(P, w.scaled(c), p, 1e-10)
        assert abs(b.total - c * a.total) <= b.tolerance + c * a.tolerance + 1e-13 * c

    @given(st.integers(0, 10_000), st.sampled_from([2, "inf", 1.5]), st.integers(1, 3), st.floats(0, 2))
    def test_monotone_in_weights(self, seed, p, u, bump):
        P = random_pointset(2, 5, seed)
        w = Weights.product([0.3, 0.6])
        a = wce(P, w, p, 1e-10)
        b = wce(P, w.with_weight(u, w[u] + bump), p, 1e-10)
        assert b.total >= a.total - a.tolerance - b.tolerance - 1e-15

    def test_deterministic(self):
        P = hammersley_2d(5, (0, 1, 0, 1, 1))
        assert wce(P, Weights.uniform(2), 3, 1e-9) == wce(P, Weights.uniform(2), 3, 1e-9)
