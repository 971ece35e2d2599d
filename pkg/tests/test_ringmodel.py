import math

import numpy as np
import pytest

from ringanneal.instance import DisorderInstance, generate
from ringanneal.meanfield import magnetization
from ringanneal.ringmodel import (PotentialGrid, PotentialTable,
                                  default_n_points, fourier_coefficients,
                                  offset_per_site, random_potential, site_sum,
                                  whiteness_test)


def hand_grid(values, gamma=0.0, n_spins=1000, mass=math.inf):
    values = np.asarray(values, dtype=float)
    n = values.size
    return PotentialGrid(gamma=gamma, theta=np.arange(n) * (math.pi / n),
                         values=values, offset=0.0, mass=mass, n_spins=n_spins)


class TestRandomPotential:
    def test_gamma_zero_closed_form(self):
        inst = generate(200, "gaussian", 3)
        pg = random_potential(inst, 0.0, 256)
        m0 = math.sqrt(2 / math.pi)
        direct = -m0 * np.abs(
            np.sin(pg.theta[:, None] - inst.theta)
        ).dot(inst.xi) + 200 * (2 / math.pi)
        assert np.allclose(pg.values, direct, atol=1e-9)

    def test_single_site_at_kink(self):
        # theta_1 on the grid: the site term collapses to -gamma there
        inst = DisorderInstance(1, "gaussian", np.array([1.3]),
                                np.array([16 * math.pi / 64]), seed=0)
        pg = random_potential(inst, 0.4, 64)
        assert pg.values[16] - pg.offset == pytest.approx(-0.4, abs=1e-12)

    def test_rejects_bad_args(self):
        inst = generate(10, "gaussian", 0)
        with pytest.raises(ValueError):
            random_potential(inst, 1.0)
        with pytest.raises(ValueError):
            random_potential(inst, 0.5, 32)

    def test_default_resolution(self):
        assert default_n_points(0.5) == 512
        assert default_n_points(0.05) == math.ceil(32 * math.pi / 0.05)

    def test_rotation_covariance(self):
        inst = generate(150, "gaussian", 9)
        phi = 0.37
        rot = DisorderInstance(150, "gaussian", inst.xi,
                               np.mod(inst.theta + phi, 2 * math.pi), seed=9)
        pg = random_potential(rot, 0.3, 128)
        shifted = site_sum(inst, 0.3, pg.theta - phi) + pg.offset
        assert np.allclose(pg.values, shifted, atol=1e-9)

    def test_variance_scales_with_n(self):
        # Var V is exactly linear in N; Monte Carlo at two sizes
        gamma, n_seeds = 0.3, 1200
        out = {}
        for n in (1000, 10 ** 4):
            vals = np.empty((n_seeds, 16))
            for s in range(n_seeds):
                inst = generate(n, "gaussian", 5000 + s)
                pg = random_potential(inst, gamma, 64)
                vals[s] = pg.values[::4]
            assert abs(vals.mean()) < 5.0 * vals.std(axis=0).mean() / math.sqrt(n_seeds)
            out[n] = float(np.mean(vals.var(axis=0)))
        assert out[10 ** 4] / out[1000] == pytest.approx(10.0, rel=0.05)


class TestFourier:
    def test_constant_input(self):
        pg = hand_grid(np.full(256, 3.7))
        coef = fourier_coefficients(pg, 20)
        assert coef[0, 0] == pytest.approx(3.7)
        assert np.allclose(coef[1:], 0.0, atol=1e-12)

    def test_parseval(self):
        rng = np.random.default_rng(0)
        pg = hand_grid(rng.standard_normal(256))
        coef = fourier_coefficients(pg, 127)
        power = 0.5 * np.sum(coef[1:, 0] ** 2 + coef[1:, 1] ** 2)
        # odd-length rfft tail: drop the Nyquist bin by using 255 points
        pg2 = hand_grid(pg.values[:255])
        coef2 = fourier_coefficients(pg2, 127)
        power2 = 0.5 * np.sum(coef2[1:, 0] ** 2 + coef2[1:, 1] ** 2)
        assert power2 == pytest.approx(float(np.var(pg2.values)), abs=1e-10)
        assert power <= np.var(pg.values) + 1e-10

    def test_reconstruction(self):
        inst = generate(300, "gaussian", 4)
        pg = random_potential(inst, 0.5, 512)
        coef = fourier_coefficients(pg, 64)
        k = np.arange(65)
        series = (coef[:, 0] * np.cos(2 * np.outer(pg.theta, k)) +
                  coef[:, 1] * np.sin(2 * np.outer(pg.theta, k))).sum(axis=1)
        err64 = np.max(np.abs(series - pg.values))
        coef8 = fourier_coefficients(pg, 8)
        k = np.arange(9)
        series8 = (coef8[:, 0] * np.cos(2 * np.outer(pg.theta, k)) +
                   coef8[:, 1] * np.sin(2 * np.outer(pg.theta, k))).sum(axis=1)
        assert err64 < np.max(np.abs(series8 - pg.values))

    def test_first_harmonic_dominates_near_critical(self):
        med = {}
        for gamma in (0.9, 0.95, 0.99):
            ratios = []
            for s in range(40):
                inst = generate(2000, "gaussian", 900 + s)
                pg = random_potential(inst, gamma, 512)
                coef = fourier_coefficients(pg, 4)
                a1 = math.hypot(coef[1, 0], coef[1, 1])
                a2 = math.hypot(coef[2, 0], coef[2, 1])
                ratios.append(a2 / a1)
            med[gamma] = float(np.median(ratios))
        assert med[0.99] < med[0.95] < med[0.9]
        assert med[0.95] < 0.15

    def test_rejects_coarse_grid(self):
        pg = hand_grid(np.zeros(64))
        with pytest.raises(ValueError):
            fourier_coefficients(pg, 32)


class TestWhiteness:
    def test_homogeneous_sinusoid(self):
        n = 512
        theta = np.arange(n) * (math.pi / n)
        pg = hand_grid(np.sin(theta + 0.3))
        res = whiteness_test(pg)
        # interior stencil, no wrap: w vanishes to O(dtheta^2)
        assert res.variance < 1e-7

    def test_rejects_finite_gamma(self):
        inst = generate(100, "gaussian", 0)
        pg = random_potential(inst, 0.2, 128)
        with pytest.raises(ValueError):
            whiteness_test(pg)

    def test_white_noise_statistics(self):
        ratios, acs = [], []
        for s in range(100):
            inst = generate(10 ** 4, "gaussian", 300 + s)
            pg = random_potential(inst, 0.0, 512)
            res = whiteness_test(pg)
            ratios.append(res.variance_ratio)
            acs.append(res.autocorr_decimated)
        assert np.mean(ratios) == pytest.approx(1.0, abs=0.2)
        assert abs(np.mean(acs)) < 0.1
        # adjacent samples share a kink window: lag-1 is 1/4 by construction
        res = whiteness_test(random_potential(generate(10 ** 4, "gaussian", 7),
                                              0.0, 512))
        assert res.autocorr_lag1 == pytest.approx(0.25, abs=0.1)

    def test_continuum_trend(self):
        # smaller N: noisier variance-ratio estimate (fewer kinks per cell)
        dev = {}
        for n in (100, 10 ** 4):
            r = []
            for s in range(60):
                pg = random_potential(generate(n, "gaussian", 70 + s), 0.0, 512)
                r.append(whiteness_test(pg).variance_ratio)
            dev[n] = float(np.mean(np.abs(np.array(r) - 1.0)))
        assert dev[100] > dev[10 ** 4]


class TestPotentialTable:
    def test_global_matches_direct(self):
        inst = generate(2000, "gaussian", 7)
        tab = PotentialTable(inst)
        for g in (0.5, 0.2, 0.05):
            direct = site_sum(inst, g, tab.theta_global) + \
                2000 * offset_per_site(g)
            assert np.max(np.abs(tab.global_values(g) - direct)) < 1e-4

    def test_window_matches_direct(self):
        inst = generate(2000, "gaussian", 7)
        tab = PotentialTable(inst)
        for g, center in ((0.02, 1.0), (0.005, 2.5)):
            th, v = tab.window_values(g, center, 6 * g, 384)
            direct = site_sum(inst, g, th) + 2000 * offset_per_site(g)
            assert np.max(np.abs(v - direct)) < 1e-5

    def test_window_wraps(self):
        inst = generate(500, "gaussian", 11)
        tab = PotentialTable(inst)
        th, v = tab.window_values(0.02, 0.01, 0.12, 256)  # spans theta < 0
        direct = site_sum(inst, 0.02, th) + 500 * offset_per_site(0.02)
        assert np.max(np.abs(v - direct)) < 1e-5


class TestSmoothnessScale:
    def test_derivative_correlation_length_grows_with_gamma(self):
        lengths = {}
        for gamma in (0.05, 0.1, 0.2, 0.4):
            acc = []
            for s in range(25):
                inst = generate(2000, "gaussian", 40 + s)
                pg = random_potential(inst, gamma, 1024)
                dv = np.diff(pg.values)
                dv -= dv.mean()
                c = np.correlate(dv, dv, "full")[dv.size - 1:]
                c /= c[0]
                below = np.flatnonzero(c < 0.5)
                acc.append(below[0] if below.size else dv.size)
            lengths[gamma] = float(np.mean(acc)) * (math.pi / 1024)
        ls = [lengths[g] for g in (0.05, 0.1, 0.2, 0.4)]
        assert ls == sorted(ls)
        assert lengths[0.4] > 3.0 * lengths[0.05]
