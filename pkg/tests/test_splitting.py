import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from l0elastica import grid, oracle, spectral
from l0elastica.driver import init_state
from l0elastica.splitting import (
    ProjectionConfig,
    SplitState,
    StepFourSolver,
    curvature_shrink,
    lambda_rhs,
    lambda_update,
    project_s,
    projection_cost,
    step_four,
    step_four_rhs,
    threshold_l0,
)

STEP4 = dict(tau=0.1, gamma2=0.01, gamma3=20.0, alpha_w=50.0, alpha_n=10.0)


def pixel(vec):
    return np.asarray(vec, dtype=float).reshape(2, 1, 1)


def random_state(shape, seed=0):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(shape)
    return SplitState(
        p=rng.standard_normal((2,) + shape), lam=rng.standard_normal((2,) + shape),
        r=rng.standard_normal(shape), s=rng.standard_normal((2,) + shape), v=v,
    )


class TestThreshold:
    def test_examples(self, backend):
        p = np.stack([np.array([[0.005, 0.02, 0.0]]), np.zeros((1, 3))])
        out = threshold_l0(p, 0.1, 2e-3)
        np.testing.assert_array_equal(out[0], [[0.0, 0.02, 0.0]])

    def test_boundary_is_zeroed(self, backend):
        # |p|^2 == tau*alpha0/2 exactly
        out = threshold_l0(pixel([0.5, 0.0]), 0.5, 2.0)
        assert np.all(out == 0.0)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.floats(1e-3, 1.0), st.floats(1.0, 4.0))
    def test_idempotent_and_monotone(self, seed, alpha0, factor):
        p = np.random.default_rng(seed).standard_normal((2, 6, 5)) * 0.3
        once = threshold_l0(p, 0.1, alpha0)
        np.testing.assert_array_equal(threshold_l0(once, 0.1, alpha0), once)
        kept = np.any(once != 0, axis=0)
        np.testing.assert_array_equal(once[:, kept], p[:, kept])
        stronger = np.any(threshold_l0(p, 0.1, alpha0 * factor) != 0, axis=0)
        assert np.all(kept | ~stronger)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            threshold_l0(np.zeros((2, 2, 2)), 0.0, 1.0)


class TestCurvatureShrink:
    def test_no_curvature_leaves_p(self, backend):
        p = np.random.default_rng(0).standard_normal((2, 5, 5))
        lam = np.ones((2, 5, 5))  # constant field: div- lam = 0
        np.testing.assert_array_equal(curvature_shrink(p, lam, 0.1, 1.0), p)

    def test_factor_and_clamp(self, backend):
        # div- lam = 2 at pixel (0, 0) of a 1x2 strip built by hand
        lam = np.zeros((2, 1, 2))
        lam[1, 0, 0] = 1.0
        lam[1, 0, 1] = -1.0
        div = grid.div_backward(lam)
        assert div[0, 0] == pytest.approx(2.0)
        p = np.zeros((2, 1, 2))
        p[0, 0, 0] = 1.0
        p[0, 0, 1] = 0.1
        out = curvature_shrink(p, lam, 0.1, 1.0)
        assert out[0, 0, 0] == pytest.approx(0.6)  # 1 - 0.1*4/1
        assert out[0, 0, 1] == 0.0  # shrink 0.4 > |p| = 0.1

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_never_grows_and_keeps_direction(self, seed):
        rng = np.random.default_rng(seed)
        p = rng.standard_normal((2, 6, 6))
        p[:, 0, 0] = 0.0
        out = curvature_shrink(p, rng.standard_normal((2, 6, 6)), 0.1, 0.5)
        assert np.all(grid.magnitude(out) <= grid.magnitude(p) + 1e-15)
        cross = out[0] * p[1] - out[1] * p[0]
        assert np.abs(cross).max() < 1e-12
        assert np.all(out[0] * p[0] + out[1] * p[1] >= 0)
        assert np.all(out[:, 0, 0] == 0.0)


class TestLambdaUpdate:
    def test_zero_p_is_fixed_point(self):
        lam = np.random.default_rng(1).standard_normal((2, 8, 8))
        sym = spectral.build_lambda_symbols(1.0, 0.5, 1.0, (8, 8))
        np.testing.assert_allclose(lambda_update(np.zeros_like(lam), lam, 0.1, 0.3, sym), lam, atol=1e-10)

    def test_constant_lambda_unchanged(self):
        lam = np.ones((2, 6, 6)) * np.array([0.6, 0.8])[:, None, None]
        p = np.random.default_rng(2).standard_normal((2, 6, 6))
        sym = spectral.build_lambda_symbols(1.0, 1e-9, 1.0, (6, 6))
        np.testing.assert_allclose(lambda_update(p, lam, 0.1, 0.3, sym), lam, atol=1e-12)

    @pytest.mark.parametrize("c", [1e-9, 0.5])
    def test_matches_dense(self, c):
        rng = np.random.default_rng(3)
        p, lam = rng.standard_normal((2, 2, 8, 8))
        sym = spectral.build_lambda_symbols(1.0, c, 1.0, (8, 8))
        b = lambda_rhs(p, lam, 0.1, 0.7, 1.0, c)
        ref = oracle.dense_lambda_solve(b, 1.0, c)
        np.testing.assert_allclose(lambda_update(p, lam, 0.1, 0.7, sym), ref, atol=1e-10)


class TestProjection:
    cfg = ProjectionConfig()

    def test_feasible_zero_p(self, backend):
        q, mu = project_s(pixel([0.0, 0.0]), pixel([0.3, -0.4]), self.cfg)
        np.testing.assert_array_equal(q.ravel(), [0.0, 0.0])
        np.testing.assert_allclose(mu.ravel(), [0.3, -0.4])

    def test_feasible_aligned_pair(self, backend):
        p = np.array([1.2, -0.5])
        lam = p / np.linalg.norm(p)
        q, mu = project_s(pixel(p), pixel(lam), self.cfg)
        np.testing.assert_allclose(q.ravel(), p, atol=1e-12)
        np.testing.assert_allclose(mu.ravel(), lam, atol=1e-12)

    def test_lambda_clipped_to_disc(self, backend):
        q, mu = project_s(pixel([0.0, 0.0]), pixel([3.0, 4.0]), self.cfg)
        assert np.all(q == 0.0)
        np.testing.assert_allclose(mu.ravel(), [0.6, 0.8])

    def test_degenerate_falls_back_to_zero_branch(self, backend):
        # theta*y + gamma1*w vanishes at theta0 = |y| = 1
        q, mu = project_s(pixel([1.0, 0.0]), pixel([-1.0, 0.0]), self.cfg)
        assert np.all(q == 0.0)
        np.testing.assert_allclose(mu.ravel(), [-1.0, 0.0])

    def test_tie_goes_to_zero_branch(self, backend):
        # p = (0, 0), lam = 0: both candidates have G = 0 only on the q = 0 side
        q, mu = project_s(pixel([0.0, 0.0]), pixel([0.0, 0.0]), self.cfg)
        assert np.all(q == 0.0) and np.all(mu == 0.0)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.floats(0.1, 3.0))
    def test_feasible_and_no_worse_than_either_branch(self, seed, scale):
        rng = np.random.default_rng(seed)
        p = scale * rng.standard_normal((2, 5, 5))
        lam = rng.standard_normal((2, 5, 5))
        q, mu = project_s(p, lam, self.cfg)
        qn = grid.magnitude(q)
        assert grid.magnitude(mu).max() <= 1.0 + 1e-8
        assert np.all(np.abs((q * mu).sum(axis=0) - qn) <= 1e-8 * (1.0 + qn))
        g = projection_cost(q, mu, p, lam, 1.0)
        lam_hat = lam / np.maximum(1.0, grid.magnitude(lam))
        assert np.all(g <= projection_cost(np.zeros_like(p), lam_hat, p, lam, 1.0) + 1e-12)

    def test_brute_force_optimality(self, backend):
        rng = np.random.default_rng(11)
        for _ in range(20):
            p, lam = rng.standard_normal(2) * 1.5, rng.standard_normal(2) * 1.5
            q, mu = project_s(pixel(p), pixel(lam), self.cfg)
            g = oracle.projection_objective(q.ravel(), mu.ravel(), p, lam, 1.0)
            assert g <= oracle.brute_force_project_s(p, lam, 1.0, 20_000, rng) + 1e-6

    def test_config_validation(self):
        for bad in (dict(epsilon=0.0), dict(max_fixed_point_iters=0), dict(gamma1=-1.0)):
            with pytest.raises(ValueError):
                ProjectionConfig(**bad)


class TestStepFour:
    def test_zero_state_zero_image(self):
        shape = (6, 6)
        z2 = np.zeros((2,) + shape)
        state = SplitState(p=z2, lam=z2, r=np.zeros(shape), s=z2, v=np.zeros(shape))
        sym = spectral.build_step_four_symbols(shape, **STEP4)
        out = step_four(state, np.zeros(shape), sym)
        for name in ("p", "r", "s", "v"):
            assert np.all(getattr(out, name) == 0.0)

    def test_constant_image(self):
        shape = (6, 6)
        z2 = np.zeros((2,) + shape)
        state = SplitState(p=z2, lam=z2, r=np.zeros(shape), s=z2, v=np.zeros(shape))
        sym = spectral.build_step_four_symbols(shape, **STEP4, kappa=0.0)
        out = step_four(state, np.full(shape, 0.4), sym)
        # at DC: tau v + tau r = tau f and tau v + (gamma2 + tau) r = tau f  ->  r = 0, v = f
        np.testing.assert_allclose(out.v, 0.4, atol=1e-12)
        np.testing.assert_allclose(out.r, 0.0, atol=1e-12)
        np.testing.assert_allclose(out.s, 0.0, atol=1e-14)
        np.testing.assert_allclose(out.p, 0.0, atol=1e-12)

    @pytest.mark.parametrize("smooth", [True, False])
    def test_matches_dense_and_freezes_lambda(self, smooth):
        shape = (8, 8)
        state = random_state(shape, 4)
        f = np.random.default_rng(5).random(shape)
        sym = spectral.build_step_four_symbols(shape, **STEP4, smooth=smooth)
        out = step_four(state, f, sym)
        b = step_four_rhs(state, f, STEP4["tau"], STEP4["gamma2"], STEP4["gamma3"])
        v, r, s1, s2 = oracle.dense_step_four_solve(*b, **STEP4, smooth=smooth)
        np.testing.assert_allclose(out.v, v, atol=1e-8)
        np.testing.assert_allclose(out.r, r, atol=1e-8)
        np.testing.assert_allclose(out.s, np.stack([s1, s2]), atol=1e-8)
        np.testing.assert_array_equal(out.p, grid.grad_forward(out.v))
        assert out.lam is state.lam

    def test_residual_of_coupled_rows(self):
        shape = (8, 8)
        state = random_state(shape, 6)
        f = np.random.default_rng(7).random(shape)
        sym = spectral.build_step_four_symbols(shape, **STEP4)
        out = step_four(state, f, sym)
        op = oracle.dense_step_four_operator(shape, **STEP4)
        b = op.to_vector(step_four_rhs(state, f, 0.1, 0.01, 20.0))
        x = op.to_vector((out.v, out.r, out.s[0], out.s[1]))
        assert np.linalg.norm(op.matrix @ x - b) <= 1e-8 * np.linalg.norm(b)

    @pytest.mark.parametrize("smooth", [True, False])
    def test_cached_solver_matches_reference(self, smooth):
        shape = (9, 7)
        f = np.random.default_rng(8).random(shape)
        sym = spectral.build_step_four_symbols(shape, **STEP4, smooth=smooth)
        solver = StepFourSolver(f, sym)
        fast = slow = init_state(f, smooth=smooth)
        rng = np.random.default_rng(9)
        for _ in range(3):
            p = rng.standard_normal((2,) + shape)
            fast = solver.step(fast.replace(p=p))
            slow = step_four(slow.replace(p=p), f, sym)
            for name in ("v", "r", "s", "p"):
                np.testing.assert_allclose(getattr(fast, name), getattr(slow, name), atol=1e-12)

    def test_cached_solver_recomputes_foreign_state(self):
        shape = (6, 6)
        f = np.random.default_rng(10).random(shape)
        sym = spectral.build_step_four_symbols(shape, **STEP4)
        solver = StepFourSolver(f, sym)
        solver.step(random_state(shape, 11))
        other = random_state(shape, 12)
        for name in ("v", "r", "s"):
            np.testing.assert_allclose(getattr(solver.step(other), name),
                                       getattr(step_four(other, f, sym), name), atol=1e-12)

    def test_solver_shape_check(self):
        sym = spectral.build_step_four_symbols((6, 6), **STEP4)
        with pytest.raises(ValueError):
            StepFourSolver(np.zeros((5, 6)), sym)
