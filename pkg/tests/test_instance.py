import math

import numpy as np
import pytest
from scipy import integrate, stats

from ringanneal.instance import (DisorderInstance, SpinAssignment,
                                 brute_force_classical, classical_energy,
                                 classical_gap, generate, instance_from_text,
                                 instance_to_text, solve_classical)


def make_instance(xi, theta, dist="gaussian", seed=0):
    xi = np.asarray(xi, dtype=float)
    theta = np.asarray(theta, dtype=float)
    return DisorderInstance(n_spins=xi.size, dist=dist, xi=xi, theta=theta,
                            seed=seed)


class TestGenerate:
    def test_bimodal_magnitudes_fixed(self):
        inst = generate(4, "bimodal", seed=123)
        assert np.allclose(inst.xi, math.sqrt(2.0))
        corners = (inst.theta - math.pi / 4) / (math.pi / 2)
        assert np.allclose(corners, np.round(corners))

    def test_gaussian_second_moment(self):
        # oracle: Rayleigh second moment by quadrature of xi^3 e^{-xi^2/2}
        m2, _ = integrate.quad(lambda x: x ** 3 * math.exp(-x * x / 2), 0, 20)
        inst = generate(10 ** 5, "gaussian", seed=1)
        sample = np.mean(inst.xi ** 2)
        # Var(xi^2) = E xi^4 - (E xi^2)^2
        m4, _ = integrate.quad(lambda x: x ** 5 * math.exp(-x * x / 2), 0, 20)
        sigma = math.sqrt((m4 - m2 ** 2) / inst.n_spins)
        assert abs(sample - m2) < 3 * sigma

    def test_deterministic_serialization(self):
        a = instance_to_text(generate(8, "gaussian", seed=7))
        b = instance_to_text(generate(8, "gaussian", seed=7))
        assert a == b

    def test_gaussian_marginals_ks(self):
        inst = generate(2 * 10 ** 4, "gaussian", seed=5)
        ks_xi = stats.kstest(inst.xi, lambda x: 1 - np.exp(-x * x / 2))
        ks_th = stats.kstest(inst.theta / (2 * math.pi), "uniform")
        assert ks_xi.pvalue > 1e-3
        assert ks_th.pvalue > 1e-3

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            generate(0, "gaussian", seed=1)

    def test_roundtrip(self):
        inst = generate(6, "gaussian", seed=42)
        back = instance_from_text(instance_to_text(inst))
        assert np.array_equal(back.xi, inst.xi)
        assert np.array_equal(back.theta, inst.theta)
        assert (back.n_spins, back.dist, back.seed) == (6, "gaussian", 42)


class TestClassicalEnergy:
    def test_single_site(self):
        inst = make_instance([1.0], [0.0])
        assert classical_energy(inst, np.array([1.0])) == pytest.approx(-0.5)

    def test_two_site_hand_value(self):
        inst = make_instance([1.0, 1.0], [0.0, math.pi / 2])
        e = classical_energy(inst, np.array([1.0, 1.0]))
        assert e == pytest.approx(-0.5)  # -(1/4)|(1,1)|^2

    def test_global_flip_symmetry(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            inst = generate(int(rng.integers(1, 30)), "gaussian",
                            int(rng.integers(1 << 30)))
            s = rng.choice([-1.0, 1.0], size=inst.n_spins)
            assert classical_energy(inst, s) == pytest.approx(
                classical_energy(inst, -s), rel=1e-14)

    def test_rotation_invariance(self):
        rng = np.random.default_rng(4)
        inst = generate(17, "gaussian", 11)
        s = rng.choice([-1.0, 1.0], size=17)
        for phi in (0.3, 1.2, 4.0):
            rot = make_instance(inst.xi, np.mod(inst.theta + phi, 2 * math.pi))
            assert classical_energy(rot, s) == pytest.approx(
                classical_energy(inst, s), rel=1e-12)

    def test_nonpositive_and_size_mismatch(self):
        inst = generate(9, "gaussian", 2)
        s = np.ones(9)
        assert classical_energy(inst, s) <= 0.0
        with pytest.raises(ValueError):
            classical_energy(inst, np.ones(8))

    def test_accepts_assignment_type(self):
        inst = make_instance([1.0], [0.0])
        assert classical_energy(inst, SpinAssignment(np.array([-1.0]))) == \
            pytest.approx(-0.5)


class TestSolveClassical:
    def test_single_site(self):
        inst = make_instance([1.7], [0.9])
        _, e0, candidates = solve_classical(inst)
        assert e0 == pytest.approx(-1.7 ** 2 / 2)
        assert candidates.shape == (1, 2)

    def test_matches_brute_force_seed3(self):
        inst = generate(12, "gaussian", seed=3)
        _, e0, _ = solve_classical(inst)
        _, e0_bf = brute_force_classical(inst)
        assert e0 == pytest.approx(e0_bf, rel=1e-12)

    def test_bimodal_aligned(self):
        inst = make_instance([math.sqrt(2)] * 6, [math.pi / 4] * 6, dist="bimodal")
        _, e0, candidates = solve_classical(inst)
        assert e0 == pytest.approx(-6.0)
        assert candidates.shape == (6, 2)

    def test_oracle_equivalence_random(self):
        for seed in range(25):
            n = 2 + seed % 11
            inst = generate(n, "gaussian", seed=1000 + seed)
            _, e0, candidates = solve_classical(inst)
            _, e0_bf = brute_force_classical(inst)
            assert e0 == pytest.approx(e0_bf, rel=1e-12)
            assert candidates.shape == (n, 2)

    def test_best_assignment_consistent(self):
        inst = generate(14, "gaussian", seed=77)
        best, e0, _ = solve_classical(inst)
        assert classical_energy(inst, best) == pytest.approx(e0, rel=1e-14)

    def test_candidate_energies_relabeling_invariant(self):
        inst = generate(13, "gaussian", seed=8)
        perm = np.random.default_rng(0).permutation(13)
        shuffled = make_instance(inst.xi[perm], inst.theta[perm])
        _, _, c1 = solve_classical(inst)
        _, _, c2 = solve_classical(shuffled)
        assert np.allclose(np.sort(c1[:, 1]), np.sort(c2[:, 1]), rtol=1e-12)


class TestBruteForce:
    def test_two_site(self):
        inst = make_instance([1.0, 1.0], [0.0, math.pi / 2])
        _, e0 = brute_force_classical(inst)
        assert e0 == pytest.approx(-0.5)

    def test_single_site(self):
        inst = make_instance([2.0], [1.0])
        _, e0 = brute_force_classical(inst)
        assert e0 == pytest.approx(-2.0)

    def test_rejects_large_n(self):
        inst = generate(25, "gaussian", 1)
        with pytest.raises(ValueError, match="exponential"):
            brute_force_classical(inst)


class TestClassicalGap:
    def test_degenerate_two_site(self):
        inst = make_instance([1.0, 1.0], [0.0, math.pi / 2])
        assert classical_gap(inst) == 0.0

    def test_gap_nonnegative(self):
        for seed in range(10):
            inst = generate(32, "gaussian", seed)
            assert classical_gap(inst) >= 0.0

    def test_bimodal_gap_order_one(self):
        # bimodal landscapes keep O(1) gaps: no 1/N decay between sizes
        gaps_small = [classical_gap(generate(64, "bimodal", s)) for s in range(30)]
        gaps_large = [classical_gap(generate(512, "bimodal", s)) for s in range(30)]
        m_small, m_large = np.median(gaps_small), np.median(gaps_large)
        assert m_large > 0.1
        assert m_large > 0.25 * m_small

    def test_gaussian_gap_shrinks_with_n(self):
        gaps_small = [classical_gap(generate(64, "gaussian", s)) for s in range(40)]
        gaps_large = [classical_gap(generate(512, "gaussian", s)) for s in range(40)]
        assert np.median(gaps_large) < 0.4 * np.median(gaps_small)

    def test_requires_two_sites(self):
        with pytest.raises(ValueError):
            classical_gap(generate(1, "gaussian", 0))
