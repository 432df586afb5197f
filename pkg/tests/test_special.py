import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bilinmax.core import BilinearInstance, DiagonalForm, DimensionMismatch, Ellipsoid, objective, theta_from_x
from bilinmax.generators import make_rng, random_spd
from bilinmax.maxnorm import solve_maxnorm
from bilinmax.special import (
    LpAlignedInstance,
    UnsupportedP,
    VertexPolytope,
    lp_hessian_matvec,
    lp_objective,
    lp_px_objective,
    solve_centered,
    solve_lp_aligned,
    solve_polytope,
)


class TestCentered:
    def test_unit(self):
        sol = solve_centered(np.eye(3), np.eye(3))
        assert sol.value == pytest.approx(1.0)

    def test_hand_example(self):
        sol = solve_centered(np.diag([1.0, 4.0]), np.diag([4.0, 1.0]))
        assert sol.value == pytest.approx(0.5)
        assert np.diag([1.0, 4.0]) @ sol.x @ sol.x == pytest.approx(1.0)

    @pytest.mark.parametrize("seed", range(20))
    def test_eigen_formula(self, seed):
        rng = make_rng(seed, 31)
        d = 1 + seed % 6
        A, W = random_spd(d, rng, 100.0), random_spd(d, rng, 100.0)
        sol = solve_centered(A, W)
        expected = math.sqrt(np.max(np.linalg.eigvals(np.linalg.inv(A) @ np.linalg.inv(W)).real))
        assert sol.value == pytest.approx(expected, abs=1e-8)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_maxnorm_on_zero_center(self, seed):
        rng = make_rng(seed, 32)
        A, W = random_spd(4, rng, 10.0), random_spd(4, rng, 10.0)
        m = solve_maxnorm(BilinearInstance.from_arrays(A, W, np.zeros(4)), 1e-8)
        assert abs(solve_centered(A, W).value - m.value) <= 1e-6


class TestPolytope:
    def test_l1_example(self):
        V = [[1, 0], [-1, 0], [0, 1], [0, -1]]
        sol = solve_polytope(V, Ellipsoid(np.array([0.5, 0.0]), np.eye(2)))
        np.testing.assert_allclose(sol.x, [1.0, 0.0])
        np.testing.assert_allclose(sol.theta, [1.5, 0.0])
        assert sol.value == pytest.approx(1.5)

    def test_single_vertex(self):
        sol = solve_polytope([[0.3, 0.4]], Ellipsoid(np.zeros(2), np.eye(2)))
        np.testing.assert_allclose(sol.x, [0.3, 0.4])

    def test_tie_lowest_index(self):
        a = np.linspace(0, 2 * np.pi, 7, endpoint=False)
        V = np.column_stack([np.cos(a), np.sin(a)])
        sol = solve_polytope(V, Ellipsoid(np.zeros(2), np.eye(2)))
        assert sol.diagnostics["vertex_index"] == 0
        assert sol.value == pytest.approx(1.0)

    def test_zero_vertex(self):
        sol = solve_polytope([[0.0, 0.0]], Ellipsoid(np.array([1.0, 2.0]), np.eye(2)))
        assert sol.value == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            solve_polytope([[1.0, 0.0, 0.0]], Ellipsoid(np.zeros(2), np.eye(2)))

    @pytest.mark.parametrize("seed", range(10))
    def test_double_loop(self, seed):
        rng = make_rng(seed, 33)
        V = rng.standard_normal((12, 3))
        ell = Ellipsoid(rng.standard_normal(3), random_spd(3, rng, 20.0))
        inst = BilinearInstance(np.eye(3), ell)
        best = max(objective(v, theta_from_x(v, inst)) for v in V)
        assert solve_polytope(V, ell).value == pytest.approx(best, rel=1e-12)

    def test_empty(self):
        with pytest.raises(ValueError):
            VertexPolytope(np.zeros((0, 2)))


def open_simplex(rng, d):
    return rng.dirichlet(np.ones(d))


class TestLp:
    def test_p_below_two(self):
        with pytest.raises(UnsupportedP):
            LpAlignedInstance(1.5, [1.0], [1.0])

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatch):
            LpAlignedInstance(2.0, [1.0, 2.0], [1.0])

    @pytest.mark.parametrize("p", [2.0, 3.0, 7.5])
    def test_one_dim(self, p):
        sol = solve_lp_aligned(LpAlignedInstance(p, [-2.0], [4.0]))
        assert sol.value == pytest.approx(2.5)
        np.testing.assert_allclose(sol.x, [-1.0])

    def test_p2_example(self):
        inst = LpAlignedInstance(2.0, [1.0, 0.0], [1.0, 4.0])
        m = solve_maxnorm(DiagonalForm(np.array([4.0, 1.0]), np.array([0.0, 1.0])), 1e-8)
        assert abs(solve_lp_aligned(inst).value - m.value) <= 2e-8

    def test_p4_grid(self, ref):
        sol = solve_lp_aligned(LpAlignedInstance(4.0, [1.0, 1.0], [1.0, 1.0]))
        assert sol.value == pytest.approx(ref["lp4_grid_value"], abs=1e-4)
        # barrier iterates stay strictly inside the simplex
        assert 1.0 - 1e-8 <= sol.diagnostics["action_norm"] <= 1.0

    @pytest.mark.parametrize("p", [2.0, 3.0, 4.0])
    def test_midpoint_convexity(self, p):
        rng = make_rng(int(p), 34)
        for _ in range(200):
            d = int(rng.integers(2, 8))
            inst = LpAlignedInstance(p, rng.standard_normal(d), rng.uniform(0.1, 10.0, d))
            y, z = open_simplex(rng, d), open_simplex(rng, d)
            mid = lp_objective((y + z) / 2, inst)[0]
            assert mid <= (lp_objective(y, inst)[0] + lp_objective(z, inst)[0]) / 2 + 1e-10

    @given(st.integers(0, 10_000), st.sampled_from([2.0, 3.0, 4.0]))
    def test_solution_beats_random_feasible(self, seed, p):
        rng = make_rng(seed, 35)
        d = 3
        inst = LpAlignedInstance(p, rng.standard_normal(d), rng.uniform(0.2, 5.0, d))
        sol = solve_lp_aligned(inst, 1e-8)
        x = rng.standard_normal(d)
        x /= np.sum(np.abs(x) ** p) ** (1 / p)
        assert lp_px_objective(x, inst) <= sol.value + 1e-8

    @pytest.mark.parametrize("p", [2.0, 3.0, 4.0])
    def test_fd_checks(self, p):
        rng = make_rng(int(10 * p), 36)
        for _ in range(50):
            d = 3
            inst = LpAlignedInstance(p, rng.standard_normal(d), rng.uniform(0.5, 5.0, d))
            y = 0.05 + 0.9 * open_simplex(rng, d)
            _, g = lp_objective(y, inst)
            h = 1e-6
            fd = np.array([(lp_objective(y + h * e, inst)[0] - lp_objective(y - h * e, inst)[0]) / (2 * h)
                           for e in np.eye(d)])
            assert np.linalg.norm(fd - g) <= 1e-5 * np.linalg.norm(g)
            v = rng.standard_normal(d)
            fdh = (lp_objective(y + h * v, inst)[1] - lp_objective(y - h * v, inst)[1]) / (2 * h)
            hv = lp_hessian_matvec(y, v, inst)
            assert np.linalg.norm(fdh - hv) <= 1e-4 * np.linalg.norm(hv)
