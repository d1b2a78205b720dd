import math
import warnings

import numpy as np
import pytest

from l0elastica import driver, grid, spectral
from l0elastica.driver import DecompParams, DivergenceError, ModelVariant, decompose
from l0elastica.scenes import make_scene
from l0elastica.splitting import ProjectionConfig, project_s


@pytest.fixture(scope="module")
def small_scene():
    return grid.add_gaussian_noise(make_scene("cross-light", 64), 20 / 255, seed=2)


def test_param_defaults():
    p = DecompParams()
    assert (p.tau, p.gamma1, p.gamma2, p.gamma3) == (0.1, 1.0, 0.01, 20.0)
    assert (p.c, p.kappa, p.rho, p.iter_max, p.pad_width, p.alpha0) == (1e-9, 1e-9, 1e-6, 1000, 30, 2e-3)
    assert p.variant is ModelVariant.PROPOSED


@pytest.mark.parametrize("bad", [
    dict(alpha0=0.0), dict(alpha_curv=-1.0), dict(tau=math.inf), dict(gamma3=math.nan),
    dict(c=-1e-3), dict(kappa=-1.0), dict(iter_max=-1), dict(pad_width=-2),
    dict(fp_max_iters=0), dict(lambda_init="random"), dict(variant="model4"),
])
def test_param_validation(bad):
    with pytest.raises(ValueError):
        DecompParams(**bad)


def test_params_to_dict_is_plain():
    d = DecompParams(variant="model2").to_dict()
    assert d["variant"] == "model2"
    assert set(d) >= {"alpha0", "alpha_curv", "alpha_w", "alpha_n", "tau", "rho", "iter_max", "pad_width"}


@pytest.mark.parametrize("variant,curv,smooth", [
    ("proposed", True, True), ("model1", False, False), ("model2", False, True), ("model3", True, False),
])
def test_variant_schedule(variant, curv, smooth):
    sched = driver.apply_variant(variant)
    assert (sched.curvature, sched.smooth) == (curv, smooth)


@pytest.mark.parametrize("sigma,expected", [(0, 10.0), (10, 10.0), (19.99, 10.0), (20, 1e-2), (40, 1e-2),
                                            (60, 1e-4), (80, 1e-4)])
def test_preset_alpha_n(sigma, expected):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert driver.preset_alpha_n(sigma) == expected


def test_preset_alpha_n_out_of_range():
    with pytest.warns(UserWarning):
        assert driver.preset_alpha_n(120) == 1e-4
    with pytest.raises(ValueError):
        driver.preset_alpha_n(-1)


class TestInit:
    def test_constant_half(self):
        st = driver.init_state(np.full((8, 8), 0.5))
        np.testing.assert_allclose(st.v, 0.5, atol=1e-15)
        assert np.abs(st.p).max() < 1e-15
        assert np.abs(st.r).max() < 1e-15
        assert np.all(st.s == 0.0)

    def test_mean_and_range(self):
        f = np.random.default_rng(0).random((16, 12))
        st = driver.init_state(f)
        assert st.v.mean() == pytest.approx(0.001 * f.mean() + 0.4995, abs=1e-12)
        assert 0.0 <= st.v.min() and st.v.max() <= 1.0
        np.testing.assert_allclose(st.r, f - st.v)
        np.testing.assert_array_equal(st.p, grid.grad_forward(st.v))

    def test_lambda_init_choices(self):
        f = np.random.default_rng(1).random((10, 10))
        zero = driver.init_state(f, lambda_init="zero")
        assert np.all(zero.lam == 0.0) and np.all(zero.s == 0.0)
        normal = driver.init_state(f)
        mag = grid.magnitude(normal.p)
        np.testing.assert_allclose(grid.magnitude(normal.lam)[mag > 0], 1.0)
        # (p0, lam0) already lies in the constraint set
        q, mu = project_s(normal.p, normal.lam, ProjectionConfig())
        np.testing.assert_allclose(q, normal.p, atol=1e-12)

    def test_no_smooth(self):
        st = driver.init_state(np.random.default_rng(2).random((6, 6)), smooth=False)
        assert np.all(st.r == 0.0)


class TestDecompose:
    def test_zero_iterations_returns_initial_split(self):
        f = np.random.default_rng(3).random((20, 20))
        res = decompose(f, DecompParams(iter_max=0, pad_width=0, zero_mean_w=False))
        st = driver.init_state(f)
        assert res.iterations == 0 and res.residual_history == [] and not res.converged
        np.testing.assert_allclose(res.v, st.v)
        np.testing.assert_allclose(res.w, st.r)
        assert np.all(res.n == 0.0)
        assert math.isnan(res.residual_final)

    def test_constant_image(self):
        f = np.full((48, 40), 0.3)
        res = decompose(f, DecompParams(iter_max=200))
        assert res.iterations <= 200
        assert np.abs(res.v - f).max() < 1e-3
        assert np.abs(res.w).max() < 1e-3
        assert np.abs(res.n).max() < 1e-3

    def test_literal_split_keeps_initial_offset(self):
        # without the gauge fix the constant mode stays where init put it
        f = np.full((32, 32), 0.3)
        res = decompose(f, DecompParams(iter_max=20, zero_mean_w=False))
        assert res.w.mean() == pytest.approx(0.3 - (0.001 * 0.3 + 0.4995), abs=1e-5)
        np.testing.assert_allclose(res.u, f, atol=1e-6)

    def test_identities_and_shapes(self, small_scene):
        res = decompose(small_scene, DecompParams(iter_max=15, energy_every=5))
        assert res.v.shape == res.w.shape == res.n.shape == small_scene.shape
        assert np.array_equal(res.u, res.v + res.w)
        assert res.iterations == 15 == len(res.residual_history)
        assert [k for k, _ in res.energy_trace] == [5, 10, 15]
        assert all(np.isfinite(e) for _, e in res.energy_trace)
        assert res.elapsed >= res.loop_elapsed > 0

    def test_n_has_zero_mean_without_padding(self, small_scene):
        # n = div- s of a periodic field sums to zero
        res = decompose(small_scene, DecompParams(iter_max=3, pad_width=0))
        assert abs(res.n.sum()) < 1e-10

    def test_deterministic(self, small_scene):
        a = decompose(small_scene, DecompParams(iter_max=10))
        b = decompose(small_scene, DecompParams(iter_max=10))
        for name in ("v", "w", "n"):
            assert np.array_equal(getattr(a, name), getattr(b, name))

    def test_stops_on_rho(self, small_scene):
        res = decompose(small_scene, DecompParams(iter_max=500, rho=5e-3))
        assert res.converged and res.iterations < 500
        assert res.residual_final < 5e-3
        assert max(res.residual_history[-2]) >= 5e-3

    @pytest.mark.parametrize("variant", list(ModelVariant))
    def test_variants_run(self, small_scene, variant):
        res = decompose(small_scene, DecompParams(iter_max=5, variant=variant))
        assert np.all(np.isfinite(res.u))
        if not driver.apply_variant(variant).smooth:
            assert np.all(res.w == 0.0)

    def test_model2_skips_curvature_steps(self, small_scene, monkeypatch):
        calls = []
        monkeypatch.setattr(driver, "project_s", lambda *a: calls.append(1))
        monkeypatch.setattr(driver, "curvature_shrink", lambda *a: calls.append(1))
        monkeypatch.setattr(driver, "lambda_update", lambda *a: calls.append(1))
        decompose(small_scene, DecompParams(iter_max=3, variant="model2"))
        decompose(small_scene, DecompParams(iter_max=3, variant="model1"))
        assert calls == []

    def test_mean_preserved_every_iteration(self, small_scene):
        res = decompose(small_scene, DecompParams(iter_max=25))
        total = res.v + res.w + res.n
        # cropping breaks exact equality; the padded sum is conserved up to kappa
        assert abs(total.mean() - small_scene.mean()) / small_scene.mean() < 1e-3

    def test_divergence_reported(self, small_scene, monkeypatch):
        real = driver.StepFourSolver.step

        def poisoned(self, state):
            out = real(self, state)
            v = out.v.copy()
            v[0, 0] = np.nan
            return out.replace(v=v)

        monkeypatch.setattr(driver.StepFourSolver, "step", poisoned)
        with pytest.raises(DivergenceError) as err:
            decompose(small_scene, DecompParams(iter_max=5))
        assert err.value.iteration == 1

    @pytest.mark.parametrize("bad", [np.zeros(5), np.zeros((1, 4)), np.full((4, 4), np.nan)])
    def test_rejects_bad_input(self, bad):
        with pytest.raises(ValueError):
            decompose(bad, DecompParams(iter_max=1, pad_width=0))

    def test_zero_lambda_init_keeps_projection_on_zero_branch(self, small_scene):
        # with lam = 0 the unit-normal candidate costs gamma1 against |p|^2 for
        # q = 0, so every pixel with |p| < 1 is sent to (0, 0) and lam stays 0
        st = driver.init_state(grid.pad_symmetric(small_scene, 30), lambda_init="zero")
        assert grid.magnitude(st.p).max() < 1.0
        q, mu = project_s(st.p, st.lam, ProjectionConfig())
        assert np.all(q == 0.0) and np.all(mu == 0.0)
        res = decompose(small_scene, DecompParams(iter_max=10, lambda_init="zero"))
        assert np.all(np.isfinite(res.u))


class TestEnergy:
    def test_all_zero(self):
        z = np.zeros((6, 6))
        assert driver.energy_eval(z, z, z, z, DecompParams()) == 0.0

    def test_piecewise_constant(self):
        f = np.zeros((8, 8))
        f[2:5, 3:6] = 1.0
        z = np.zeros_like(f)
        params = DecompParams()
        e = driver.energy_eval(f, z, z, f, params)
        q = grid.grad_forward(f)
        count = np.count_nonzero(grid.magnitude(q) > 0)
        assert e >= params.alpha0 * count
        e_no_curv = driver.energy_eval(f, z, z, f, DecompParams(alpha_curv=1e-300))
        assert e_no_curv == pytest.approx(params.alpha0 * count)

    def test_term_by_term(self):
        rng = np.random.default_rng(5)
        v, w, f = rng.random((3, 7, 9))
        s = rng.standard_normal((2, 7, 9))
        n = grid.div_backward(s)
        params = DecompParams(alpha0=0.3, alpha_curv=0.2, alpha_w=0.7, alpha_n=0.11)
        # second evaluation with explicit loops
        m, k = v.shape
        l0 = curv = smooth = osc = fid = 0.0
        for i in range(m):
            for j in range(k):
                q1 = v[(i + 1) % m, j] - v[i, j]
                q2 = v[i, (j + 1) % k] - v[i, j]
                mag = math.hypot(q1, q2)
                l0 += mag > 0

                def unit(a, b):
                    a1 = v[(a + 1) % m, b] - v[a, b]
                    a2 = v[a, (b + 1) % k] - v[a, b]
                    r = math.hypot(a1, a2)
                    return (a1 / r, a2 / r) if r > 0 else (0.0, 0.0)

                div = unit(i, j)[0] - unit(i - 1, j)[0] + unit(i, j)[1] - unit(i, j - 1)[1]
                curv += div**2 * mag
                lap = w[(i + 1) % m, j] + w[i - 1, j] + w[i, (j + 1) % k] + w[i, j - 1] - 4 * w[i, j]
                smooth += lap**2
                osc += s[0, i, j] ** 2 + s[1, i, j] ** 2
                fid += 0.5 * (f[i, j] - v[i, j] - w[i, j] - n[i, j]) ** 2
        ref = 0.3 * l0 + 0.2 * curv + 0.7 * smooth + 0.11 * osc + fid
        assert driver.energy_eval(v, w, n, f, params, s=s) == pytest.approx(ref, rel=1e-12)

    def test_min_norm_potential_reproduces_n(self):
        rng = np.random.default_rng(6)
        s = rng.standard_normal((2, 8, 8))
        n = grid.div_backward(s)
        g = driver._min_norm_potential(n, 1.0)
        np.testing.assert_allclose(grid.div_backward(g), n, atol=1e-12)
        assert np.sum(g**2) <= np.sum(s**2) + 1e-12

    def test_potential_uses_half_spectrum_symbols(self):
        n = np.zeros((6, 7))
        n[1, 2], n[3, 4] = 1.0, -1.0
        g = driver._min_norm_potential(n, 1.0)
        np.testing.assert_allclose(grid.div_backward(g), n, atol=1e-12)
        assert spectral.dft2(n).shape == (6, 4)
