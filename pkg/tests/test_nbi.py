import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from src.core import nbi, testbench
from src.core.errors import DegenerateDirectionError, DimensionError, DomainError, FMatrixError
from src.core.nbi import Branch, FMatrix, SolveStatus


@pytest.fixture
def sch_F():
    return nbi.build_f_matrix([0.0, 0.0], [4.0, 4.0])


@pytest.fixture
def sph_F():
    return nbi.build_f_matrix([-1.0, -1.0, -1.0], [0.0, 0.0, 0.0])


class TestFMatrix:
    def test_two_metric_pattern(self, sch_F):
        np.testing.assert_array_equal(sch_F.entries, [[0, 4], [4, 0]])
        assert len(sch_F.conditions) == 1

    def test_three_metric_pattern(self):
        F = nbi.build_f_matrix([0, 0, 0], [1, 1, 1])
        np.testing.assert_array_equal(F.entries, np.ones((3, 3)) - np.eye(3))

    def test_shift_round_trip(self, sph_F):
        f = np.array([-0.2, -0.7])
        np.testing.assert_allclose(sph_F.shift(f), [0.8, 0.3])
        np.testing.assert_allclose(sph_F.unshift(sph_F.shift(f)), f)

    def test_min_above_max(self):
        with pytest.raises(DomainError):
            nbi.build_f_matrix([1.0, 0.0], [0.0, 1.0])

    def test_singular_leading_block(self):
        with pytest.raises(FMatrixError):
            nbi.build_f_matrix([0.0, 0.0], [0.0, 1.0])

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            nbi.build_f_matrix([0.0, 0.0], [1.0])


class TestWeights:
    def test_vertical_example(self, sch_F):
        c, s = nbi.vertical_weights(sch_F, 2, [1.0, 1.0])
        assert c == pytest.approx(2.0)
        np.testing.assert_allclose(s, [0.75, 0.25])

    def test_diagonal_example(self, sch_F):
        c, s = nbi.diagonal_weights(sch_F, 2, [1.0, 1.0])
        assert c == pytest.approx(0.25)
        np.testing.assert_allclose(s, [0.5, 0.5])

    def test_degenerate_vertical_direction(self):
        # e^T F^-1 v = 0 for this block
        F = FMatrix(entries=np.array([[1.0, 1.0], [0.0, -1.0]]), f_min=np.zeros(2), f_max=np.ones(2))
        with pytest.raises(DegenerateDirectionError):
            nbi.vertical_weights(F, 2, [0.5, 0.5])

    def test_level_and_length_checks(self, sch_F):
        with pytest.raises(DimensionError):
            nbi.vertical_weights(sch_F, 2, [1.0])
        with pytest.raises(DimensionError):
            nbi.diagonal_weights(sch_F, 3, [1.0, 1.0, 1.0])

    @settings(max_examples=200, deadline=None)
    @given(
        st.integers(min_value=2, max_value=4),
        st.lists(st.floats(min_value=0.1, max_value=10.0), min_size=4, max_size=4),
        st.lists(st.floats(min_value=-1.0, max_value=1.0), min_size=4, max_size=4),
        st.lists(st.floats(min_value=-5.0, max_value=15.0), min_size=4, max_size=4),
    )
    def test_linear_identities(self, k, spans, f_min, f_around):
        f_min = np.array(f_min[:k])
        F = nbi.build_f_matrix(f_min, f_min + np.array(spans[:k]))
        target = F.shift(np.array(f_around[:k]))
        Fk = F.sub(k)

        c, s = nbi.vertical_weights(F, k, f_around[:k])
        scale = 1 + np.abs(s).max() + abs(c)
        assert s.sum() == pytest.approx(1.0, abs=1e-10 * scale)
        np.testing.assert_allclose(Fk @ s + c * nbi.vertical_direction(k), target, atol=1e-10 * scale * (1 + np.abs(target).max()))

        c, s = nbi.diagonal_weights(F, k, f_around[:k])
        scale = 1 + np.abs(s).max() + abs(c)
        assert s.sum() == pytest.approx(1.0, abs=1e-10 * scale)
        np.testing.assert_allclose(Fk @ s - c * (Fk @ np.ones(k)), target, atol=1e-10 * scale * (1 + np.abs(target).max()))


class TestHelpers:
    def test_simplex_weights(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            s = nbi.random_simplex_weights(3, rng)
            assert s.sum() == pytest.approx(1.0)
            assert np.all(s >= 0)

    def test_multistart_points(self, sch):
        points = nbi.multistart_points(sch.lower, sch.upper, 8, np.random.default_rng(1))
        assert points.shape == (8, 1)
        np.testing.assert_allclose(points[0], sch.midpoint)
        assert np.all((points >= sch.lower) & (points <= sch.upper))
        again = nbi.multistart_points(sch.lower, sch.upper, 8, np.random.default_rng(1))
        np.testing.assert_array_equal(points, again)

    def test_finite_difference_gradient_takes_the_point_first(self):
        def squares(Z):
            return np.sum(Z ** 2, axis=1)

        value, grad = nbi._fd_value_and_grad(np.array([1.0, -2.0]), squares, np.array([5.0, 5.0]))
        assert value == pytest.approx(5.0)
        np.testing.assert_allclose(grad, [2.0, -4.0], atol=1e-5)

    def test_finite_difference_steps_stay_below_the_upper_bound(self):
        def record(Z):
            assert np.all(Z <= 1.0)
            return Z[:, 0]

        _, grad = nbi._fd_value_and_grad(np.array([1.0]), record, np.array([1.0]))
        assert grad[0] == pytest.approx(1.0)

    def test_minimize_passes_extra_arguments_after_the_point(self):
        def shifted(Z):
            return np.sum((Z - 1.5) ** 2, axis=1)

        res = minimize(nbi._fd_value_and_grad, np.zeros(2), args=(shifted, np.full(2, 4.0)), jac=True,
                       method="L-BFGS-B", bounds=[(-4.0, 4.0)] * 2)
        np.testing.assert_allclose(res.x, [1.5, 1.5], atol=1e-5)


class TestAnchors:
    @pytest.mark.parametrize("i", [1, 2])
    def test_sch(self, sch, fast_solver, i):
        anchor = nbi.solve_anchor(sch, i, fast_solver, np.random.default_rng(0))
        assert anchor.f_i_min == pytest.approx(0.0, abs=1e-8)
        assert anchor.x_opt[0] == pytest.approx(0.0 if i == 1 else 2.0, abs=1e-4)

    def test_zdt1_first_metric(self, zdt1, fast_solver):
        anchor = nbi.solve_anchor(zdt1, 1, fast_solver, np.random.default_rng(0))
        assert anchor.f_i_min == pytest.approx(0.0, abs=1e-8)
        assert anchor.status == SolveStatus.CONVERGED

    def test_sph_first_metric(self, sph, fast_solver):
        anchor = nbi.solve_anchor(sph, 1, fast_solver, np.random.default_rng(0))
        assert anchor.f_i_min == pytest.approx(-1.0, abs=1e-6)

    def test_index_range(self, sch):
        with pytest.raises(DimensionError):
            nbi.solve_anchor(sch, 3)


class TestSolveNbi:
    def test_sch_diagonal(self, sch, sch_F, fast_solver):
        sol = nbi.solve_nbi(sch, sch_F, 2, [0.5, 0.5], [-4.0, -4.0], fast_solver, np.random.default_rng(0))
        assert sol.status == SolveStatus.CONVERGED
        np.testing.assert_allclose(sol.f_opt, [1.0, 1.0], atol=1e-4)
        assert sol.c_opt == pytest.approx(0.25, abs=1e-4)
        assert sol.residual <= fast_solver.tol

    def test_sch_vertical_from_anchor(self, sch, sch_F, fast_solver):
        sol = nbi.solve_nbi(sch, sch_F, 2, [1.0, 0.0], [0.0, -1.0], fast_solver, np.random.default_rng(0))
        # the pinned coordinate x^2 = 0 has a vanishing gradient, so only the penalty holds x near 0
        assert sol.usable
        np.testing.assert_allclose(sol.f_opt, [0.0, 4.0], atol=1e-2)
        assert sol.c_opt == pytest.approx(0.0, abs=1e-2)

    def test_zero_direction(self, sch, sch_F):
        with pytest.raises(DomainError):
            nbi.solve_nbi(sch, sch_F, 2, [0.5, 0.5], [0.0, 0.0])

    def test_weights_must_be_on_simplex(self, sch, sch_F):
        with pytest.raises(DomainError):
            nbi.solve_nbi(sch, sch_F, 2, [0.7, 0.7], [-4.0, -4.0])
        with pytest.raises(DomainError):
            nbi.solve_nbi(sch, sch_F, 2, [1.5, -0.5], [-4.0, -4.0])

    @pytest.mark.parametrize("name", ["SCH", "ZDT1"])
    def test_random_weights_land_on_front(self, name, fast_solver):
        p = testbench.get_problem(name)
        F = nbi.build_f_matrix([0.0, 0.0], p.f_max)
        rng = np.random.default_rng(5)
        direction = -F.sub(2) @ np.ones(2)
        for _ in range(10):
            sol = nbi.solve_nbi(p, F, 2, nbi.random_simplex_weights(2, rng), direction, fast_solver, rng)
            assert sol.usable
            assert abs(p.pf_residual(sol.f_opt.reshape(1, -1))[0]) <= 1e-3

    def test_solutions_not_dominated_by_feasible_samples(self, sch, sch_F, fast_solver):
        rng = np.random.default_rng(6)
        feasible = testbench.sample_feasible(sch, 1000, rng)
        for _ in range(5):
            sol = nbi.solve_nbi(sch, sch_F, 2, nbi.random_simplex_weights(2, rng), [-4.0, -4.0], fast_solver, rng)
            below = np.all(feasible <= sol.f_opt - 1e-6, axis=1)
            assert not below.any()


class TestAcquire:
    def test_sch_vertical_branch(self, sch, sch_F, fast_solver):
        sol = nbi.acquire_pf_point(sch, sch_F, 2, [1.0, 1.2], fast_solver, np.random.default_rng(0))
        assert sol.branch == Branch.VERTICAL
        np.testing.assert_allclose(sol.f_opt, [1.0, 1.0], atol=1e-4)
        # vertical search pins the leading coordinates
        assert sol.f_opt[0] == pytest.approx(1.0, abs=1e-5)

    def test_sphere_diagonal_branch(self, sph, sph_F, fast_solver):
        f_around = [-0.8, -0.8, -0.5]
        _, s_vert = nbi.vertical_weights(sph_F, 3, f_around)
        assert s_vert.min() < 0
        sol = nbi.acquire_pf_point(sph, sph_F, 3, f_around, fast_solver, np.random.default_rng(0))
        assert sol.branch == Branch.DIAGONAL
        assert np.linalg.norm(sol.f_opt) == pytest.approx(1.0, abs=1e-3)

    def test_sphere_clamped_branch(self, sph, sph_F, fast_solver):
        f_around = [-0.8, -0.8, -0.2]
        _, s_diag = nbi.diagonal_weights(sph_F, 3, f_around)
        assert s_diag.min() < 0
        sol = nbi.acquire_pf_point(sph, sph_F, 3, f_around, fast_solver, np.random.default_rng(0))
        assert sol.branch == Branch.CLAMPED
        assert np.all(sol.weights >= 0)
        assert sol.weights.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.linalg.norm(sol.f_opt) == pytest.approx(1.0, abs=1e-3)
