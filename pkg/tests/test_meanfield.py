import math

import numpy as np
import pytest
from scipy import integrate

from ringanneal.meanfield import (MeanFieldSolution, ScalingExponents,
                                  effective_mass, effective_potential,
                                  magnetization, qcp_scaling,
                                  selfconsistency_residual, solve)


def mass_per_spin_polar(gamma, m):
    """Oracle: literal 2D quadrature of the defining average
    (Rayleigh magnitude x uniform angle)."""
    def inner(th):
        f = lambda x: (gamma ** 2 * x * x * m * m * math.cos(th) ** 2
                       / (4 * (gamma ** 2 + x * x * m * m * math.sin(th) ** 2) ** 2.5)
                       ) * x * math.exp(-x * x / 2)
        v, _ = integrate.quad(f, 0, 12, limit=400)
        return v
    v, _ = integrate.quad(inner, 0, math.pi, limit=200)
    return v / math.pi


class TestMagnetization:
    def test_gamma_zero_exact(self):
        assert magnetization(0.0) == pytest.approx(math.sqrt(2 / math.pi), abs=1e-8)

    def test_paramagnet(self):
        assert magnetization(1.2) == 0.0
        assert magnetization(1.0) == 0.0

    def test_residual_small(self):
        for g in (0.1, 0.5, 0.9, 0.99):
            assert selfconsistency_residual(magnetization(g), g) < 1e-10

    def test_critical_exponent_half(self):
        gammas = 1.0 - np.logspace(-4, -2, 9)
        x = np.log(1.0 - gammas)
        y = np.log([magnetization(g) for g in gammas])
        slope = np.polyfit(x, y, 1)[0]
        assert slope == pytest.approx(0.5, abs=0.02)

    def test_monotone_and_continuous_at_critical(self):
        gs = np.linspace(0.0, 0.999, 40)
        ms = [magnetization(g) for g in gs]
        assert all(a >= b - 1e-12 for a, b in zip(ms, ms[1:]))
        assert magnetization(1.0 - 1e-7) < 5e-4

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            magnetization(-0.1)


class TestEffectivePotential:
    def test_zero_m(self):
        for g in (0.2, 0.7, 1.5):
            assert effective_potential(0.0, g) == pytest.approx(-g, abs=1e-12)

    def test_gamma_zero_minimum_value(self):
        m0 = math.sqrt(2 / math.pi)
        assert effective_potential(m0, 0.0) == pytest.approx(-1 / math.pi, abs=1e-10)

    def test_argmin_matches_magnetization(self):
        gamma = 0.5
        # golden-section oracle on the quadrature potential ...
        lo, hi = 0.0, 1.0
        inv = (math.sqrt(5) - 1) / 2
        a, b = hi - inv * (hi - lo), lo + inv * (hi - lo)
        fa, fb = (effective_potential(a, gamma), effective_potential(b, gamma))
        for _ in range(40):
            if fa < fb:
                hi, b, fb = b, a, fa
                a = hi - inv * (hi - lo)
                fa = effective_potential(a, gamma)
            else:
                lo, a, fa = a, b, fb
                b = lo + inv * (hi - lo)
                fb = effective_potential(b, gamma)
        coarse = 0.5 * (lo + hi)
        # ... then a parabolic vertex through the flat bottom (position noise
        # of pure golden section is limited by quadrature precision)
        h = 1e-4
        f0 = effective_potential(coarse - h, gamma)
        f1 = effective_potential(coarse, gamma)
        f2 = effective_potential(coarse + h, gamma)
        argmin = coarse + 0.5 * h * (f0 - f2) / (f0 - 2 * f1 + f2)
        assert argmin == pytest.approx(magnetization(gamma), abs=1e-8)

    def test_minimum_on_grid(self):
        for gamma in (0.2, 0.6, 0.9):
            mg = magnetization(gamma)
            vmin = effective_potential(mg, gamma)
            for m in np.linspace(0.0, 1.2, 25):
                assert vmin <= effective_potential(m, gamma) + 1e-12


class TestEffectiveMass:
    def test_matches_polar_quadrature(self):
        for gamma in (0.1, 0.5, 0.9):
            m = magnetization(gamma)
            assert effective_mass(gamma, 1) == pytest.approx(
                mass_per_spin_polar(gamma, m), rel=1e-9)

    def test_linear_in_n(self):
        assert effective_mass(0.4, 2000) == pytest.approx(
            2 * effective_mass(0.4, 1000), rel=1e-13)

    def test_small_gamma_divergence(self):
        # the defining integral (and the closed form it equals) gives
        # M -> N/(3 pi gamma^2); computed here against the quadrature oracle
        gamma = 0.01
        m_val = effective_mass(gamma, 1)
        assert m_val * 3 * math.pi * gamma ** 2 == pytest.approx(1.0, abs=0.01)
        assert m_val == pytest.approx(mass_per_spin_polar(gamma, magnetization(gamma)),
                                      rel=1e-8)

    def test_stability_under_refinement(self):
        # same average via an independent high-order fixed rule
        gamma, m = 0.5, magnetization(0.5)
        x, w = np.polynomial.legendre.leggauss(400)
        for hi in (12.0, 14.0):
            xs = 0.5 * hi * (x + 1)
            ws = 0.5 * hi * w
            f = (gamma ** 2 + (m * xs) ** 2) ** -2.5 * np.sqrt(2 / np.pi) * \
                np.exp(-xs ** 2 / 2)
            val = 0.25 * gamma ** 2 * m * m * (f * ws).sum()
            assert effective_mass(gamma, 1000) / 1000 == pytest.approx(val, abs=1e-8)

    def test_rejects_paramagnet(self):
        with pytest.raises(ValueError):
            effective_mass(1.0, 10)
        with pytest.raises(ValueError):
            effective_mass(1.3, 10)


class TestQcpScaling:
    def test_paper_exponents(self):
        gap, width = qcp_scaling(ScalingExponents(a=2.0, b=0.5), 1000)
        assert gap == pytest.approx(0.1, rel=1e-12)
        assert width == pytest.approx(0.01, rel=1e-12)

    def test_unit_n(self):
        assert qcp_scaling(ScalingExponents(2.0, 0.5), 1) == (1.0, 1.0)

    def test_other_exponents(self):
        gap, width = qcp_scaling(ScalingExponents(3.0, 1.0), 16)
        assert gap == pytest.approx(0.25)
        assert width == pytest.approx(0.25)

    def test_rejects_bad_order(self):
        with pytest.raises(ValueError):
            qcp_scaling(ScalingExponents(1.0, 1.0), 10)


class TestSolve:
    def test_bundle(self):
        sol = solve(0.5)
        assert isinstance(sol, MeanFieldSolution)
        assert sol.m_gamma == magnetization(0.5)
        assert sol.mass_per_spin > 0
        assert math.isnan(solve(1.5).mass_per_spin)
