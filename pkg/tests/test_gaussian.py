import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jmqkd import gaussian as G

I2 = np.eye(2)


def same(a, b, tol=1e-12):
    return np.abs(a.X - b.X).max() < tol and np.abs(a.Y - b.Y).max() < tol and np.abs(a.delta - b.delta).max() < tol


def random_channel(rng):
    X = rng.normal(size=(2, 2))
    A = rng.normal(size=(2, 2))
    return G.GaussianChannelXY(X, A @ A.T, rng.normal(size=2))


class TestConstruction:
    def test_thermal(self):
        assert same(G.thermal_xy(1.0, 0.0), G.IDENTITY)
        t = G.thermal_xy(0.5, 0.0)
        assert np.allclose(t.X, I2 / math.sqrt(2)) and np.allclose(t.Y, 0.5 * I2)
        assert np.allclose(G.thermal_xy(0.5, 0.2).Y, 0.6 * I2)

    def test_thermal_params(self):
        assert math.isnan(G.ThermalParams(1.0, 0.1).nu)
        assert np.allclose(G.thermal_xy(1.0, 0.1).Y, 0.1 * I2)
        with pytest.raises(ValueError):
            G.ThermalParams(1.2, 0.0)
        assert G.ThermalParams(0.5, 0.2).nu == pytest.approx(0.1)

    def test_amp_bs(self):
        assert same(G.amp_xy(1), G.IDENTITY)
        assert same(G.bs_trace_xy(1), G.IDENTITY)
        a = G.amp_xy(2)
        assert np.allclose(a.X, math.sqrt(2) * I2) and np.allclose(a.Y, I2)
        with pytest.raises(ValueError):
            G.amp_xy(0.5)

    def test_physical(self):
        for ch in (G.thermal_xy(0.3, 0.4), G.amp_xy(3), G.bs_trace_xy(4)):
            assert ch.physical
        assert G.IDENTITY.physical
        assert not G.GaussianChannelXY(math.sqrt(2) * I2, 0.5 * I2).physical


class TestCompose:
    def test_identity(self):
        rng = np.random.default_rng(0)
        c = random_channel(rng)
        assert same(G.compose(c, G.IDENTITY), c) and same(G.compose(G.IDENTITY, c), c)

    def test_loss_multiplies(self):
        assert same(G.compose(G.thermal_xy(0.7, 0), G.thermal_xy(0.4, 0)), G.thermal_xy(0.28, 0))

    def test_associative(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            a, b, c = (random_channel(rng) for _ in range(3))
            assert same(G.compose(G.compose(a, b), c), G.compose(a, G.compose(b, c)), 1e-9)

    def test_matches_sequential_application(self):
        rng = np.random.default_rng(2)
        a, b = random_channel(rng), random_channel(rng)
        V, mu = np.diag([2.0, 0.7]), np.array([0.3, -1.0])
        V1, mu1 = b.apply(*a.apply(V, mu))
        V2, mu2 = G.compose(a, b).apply(V, mu)
        assert np.allclose(V1, V2) and np.allclose(mu1, mu2)

    @pytest.mark.parametrize("N", [2, 3, 5])
    @pytest.mark.parametrize("eps", [0.0, 0.3, 1.0])
    def test_parent_construction(self, N, eps):
        c = G.compose(G.amp_xy(1 / (1 - eps / 2)), G.bs_trace_xy(N))
        assert same(c, G.thermal_xy(1 / (N * (1 - eps / 2)), eps))


class TestExtendibility:
    def test_examples(self):
        assert not G.n_extendable_gaussian(G.IDENTITY, 2)
        assert not G.n_extendable_gaussian(G.thermal_xy(0.6, 0), 2)
        assert G.n_extendable_gaussian(G.thermal_xy(0.5, 0), 2)

    @pytest.mark.parametrize("N", [2, 3, 7])
    @pytest.mark.parametrize("eps", [0.0, 0.5, 1.5])
    def test_boundary(self, N, eps):
        eta = 1 / (N * (1 - eps / 2))
        if eta <= 1:
            assert G.n_extendable_gaussian(G.thermal_xy(eta, eps), N)

    @settings(max_examples=200)
    @given(st.integers(1, 10), st.floats(0, 0.999), st.floats(0, 1.9))
    def test_agrees_with_ub(self, N, eta, eps):
        ub = G.ub_thermal(N, eps).raw
        if abs(eta - ub) > 1e-9:
            assert G.n_extendable_gaussian(G.thermal_xy(eta, eps), N) == (eta < ub)

    def test_bounds(self):
        assert G.ub_thermal(2, 0).value == 0.5
        assert G.ub_thermal(3, 1).value == pytest.approx(2 / 3)
        assert G.ub_thermal(2, 0.5).value == pytest.approx(2 / 3)
        assert G.ub_gaussian_meas(0).value == 0.5
        assert G.ub_gaussian_meas(1).value == 1
        assert G.ub_gaussian_meas(0.5).value == pytest.approx(2 / 3)


class TestHomodyne:
    def test_params(self):
        assert G.homodyne_sim_params(0.5, 0) == pytest.approx((1.0, 0.0))
        assert G.homodyne_sim_params(0.25, 0) == pytest.approx((math.sqrt(0.5), 0.25))
        with pytest.raises(ValueError):
            G.homodyne_sim_params(0.6, 0)

    def test_gaussian_moments_oracle(self):
        rng = np.random.default_rng(0)
        s = rng.normal(1.3, math.sqrt(0.4), size=400_000)
        m = G.gaussian_moments(1.3, 0.4, 4)
        assert np.allclose(m, [np.mean(s ** n) for n in range(5)], rtol=2e-2)

    def test_boundary_coherent(self):
        thetas = np.linspace(0, math.pi, 8, endpoint=False)
        mom = G.coherent_quadrature_moments(0.7 + 0.4j, thetas, 8)
        for eps in (0.0, 0.5):
            eta = 1 / (2 - eps)
            assert G.homodyne_moment_check(eta, eps, mom, 8, thetas) < 1e-9

    def test_first_moment_exact(self):
        thetas = [0.0, 1.0]
        mom = G.coherent_quadrature_moments(1.1, thetas, 1)
        assert G.homodyne_moment_check(0.3, 0.2, mom, 1, thetas) == 0.0

    def test_vacuum_second_moment(self):
        eta, eps = 0.3, 0.4
        vac = G.coherent_quadrature_moments(0, [0.0], 2)
        target = G.thermal_output_moments(eta, eps, vac[0])
        assert target[2] == pytest.approx(eta * 0.5 + 0.5 * (1 - eta + eps * eta), abs=1e-12)
        g, s2 = G.homodyne_sim_params(eta, eps)
        assert G.heterodyne_sim_moments(g, s2, vac[0])[2] == pytest.approx(target[2], abs=1e-12)

    def test_n_max_cap(self):
        with pytest.raises(ValueError):
            G.homodyne_moment_check(0.3, 0, np.zeros((1, 12)), 11, [0.0])


class TestDecomposition:
    def test_necessary(self):
        eta, eps = 0.6, 0.3
        assert G.gauss_decomp_necessary(G.thermal_xy(eta, eps), eta, eps)
        bad_x = G.GaussianChannelXY(math.sqrt(eta) * np.diag([1, 0.99]), 0.5 * I2)
        assert not G.gauss_decomp_necessary(bad_x, eta, eps)
        bad_y = G.GaussianChannelXY(math.sqrt(eta) * I2, (1 - eta + eta * eps + 0.01) * I2)
        assert not G.gauss_decomp_necessary(bad_y, eta, eps)

    def test_no_attack(self):
        assert G.no_gauss_cc_attack(0.8, 0, 2)
        assert not G.no_gauss_cc_attack(0.4, 0, 2)
        for N, eps in ((2, 0.5), (3, 0.2)):
            assert not G.no_gauss_cc_attack(1 / (N * (1 - eps / 2)), eps, N)
