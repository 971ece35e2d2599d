"""Disorder instances of the two-pattern Hopfield model and the exact classical solver.

A site i carries a planar vector xi_i * (cos theta_i, sin theta_i).  The
classical energy of a spin assignment s is

    E(s) = -(1/2N) | sum_i xi_i s_i |^2

(vector modulus), which is the p=2 rank-2 coupling energy including the
constant self-coupling term.  Classical local minima correspond to
assignments induced by a separating line through the origin, which makes
the global optimum computable in O(N log N) by sweeping the line angle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_DEDUP_RTOL = 1e-12
_BRUTE_FORCE_MAX = 24

_BIMODAL_XI = math.sqrt(2.0)


@dataclass(frozen=True)
class DisorderInstance:
    """One realization of the p=2 Hopfield disorder."""

    n_spins: int
    dist: str  # "gaussian" or "bimodal"
    xi: np.ndarray  # magnitudes, shape (N,), all >= 0
    theta: np.ndarray  # angles in [0, 2pi), shape (N,)
    seed: int

    def vectors(self) -> np.ndarray:
        """Site vectors xi_i (cos theta_i, sin theta_i), shape (N, 2)."""
        return np.column_stack(
            (self.xi * np.cos(self.theta), self.xi * np.sin(self.theta))
        )


@dataclass(frozen=True)
class SpinAssignment:
    spins: np.ndarray  # values in {-1, +1}


def generate(n_spins: int, dist: str, seed: int) -> DisorderInstance:
    """Draw a disorder realization, deterministic in the seed.

    gaussian: the two Cartesian components of each site vector are i.i.d.
    standard normal, so xi is Rayleigh and theta uniform.  bimodal: pattern
    components are +-1, giving xi = sqrt(2) and theta on the diagonals.
    """
    if n_spins < 1:
        raise ValueError("n_spins must be >= 1")
    if dist not in ("gaussian", "bimodal"):
        raise ValueError(f"unknown disorder distribution {dist!r}")
    rng = np.random.default_rng(seed & 0xFFFFFFFFFFFFFFFF)
    if dist == "gaussian":
        xy = rng.standard_normal((n_spins, 2))
        xi = np.hypot(xy[:, 0], xy[:, 1])
        theta = np.mod(np.arctan2(xy[:, 1], xy[:, 0]), 2.0 * np.pi)
    else:
        corner = rng.integers(0, 4, size=n_spins)
        xi = np.full(n_spins, _BIMODAL_XI)
        theta = np.pi / 4.0 + corner * (np.pi / 2.0)
    xi.setflags(write=False)
    theta.setflags(write=False)
    return DisorderInstance(n_spins=n_spins, dist=dist, xi=xi, theta=theta, seed=seed)


def _spins_array(s, n: int) -> np.ndarray:
    spins = np.asarray(s.spins if isinstance(s, SpinAssignment) else s, dtype=float)
    if spins.shape != (n,):
        raise ValueError(f"spin assignment has shape {spins.shape}, expected ({n},)")
    return spins


def classical_energy(instance: DisorderInstance, s) -> float:
    """E(s) = -(1/2N)|sum_i xi_i s_i|^2; invariant under the global flip s -> -s."""
    spins = _spins_array(s, instance.n_spins)
    a = float(np.dot(instance.xi * np.cos(instance.theta), spins))
    b = float(np.dot(instance.xi * np.sin(instance.theta), spins))
    return -(a * a + b * b) / (2.0 * instance.n_spins)


def _separating_scan(instance: DisorderInstance):
    """March the separating line over one half-turn.

    Yields the N candidate assignments, one per critical angle
    (theta_i + pi/2 mod pi), ties broken by site index.  Each unordered
    partition appears exactly once because opposite line orientations give
    globally flipped assignments.
    """
    n = instance.n_spins
    vx = instance.xi * np.cos(instance.theta)
    vy = instance.xi * np.sin(instance.theta)
    crit = np.mod(instance.theta + np.pi / 2.0, np.pi)
    order = np.lexsort((np.arange(n), crit))
    # assignment valid on the wrap interval [crit_last, crit_first + pi)
    phi = 0.5 * (crit[order[-1]] + crit[order[0]] + np.pi)
    s = np.where(np.cos(instance.theta - phi) > 0.0, 1.0, -1.0)
    a = float(np.dot(vx, s))
    b = float(np.dot(vy, s))
    angles = np.empty(n)
    energies = np.empty(n)
    for j, k in enumerate(order):
        s[k] = -s[k]
        a += 2.0 * s[k] * vx[k]
        b += 2.0 * s[k] * vy[k]
        angles[j] = crit[k]
        energies[j] = -(a * a + b * b) / (2.0 * n)
    return s, order, angles, energies


def solve_classical(instance: DisorderInstance):
    """Exact classical optimum by the sort-by-angle separating-line scan.

    Returns (best, e0, candidates) where candidates is an (N, 2) array of
    (line angle, energy) sampling every separating-line assignment; e0 is
    recomputed from the winning assignment (no accumulated drift).
    """
    if instance.n_spins < 1:
        raise ValueError("empty instance")
    s_final, order, angles, energies = _separating_scan(instance)
    best_j = int(np.argmin(energies))
    # rebuild the winning assignment: undo the flips that came after it
    s_best = s_final.copy()
    for k in order[best_j + 1:]:
        s_best[k] = -s_best[k]
    e0 = classical_energy(instance, s_best)
    candidates = np.column_stack((angles, energies))
    return SpinAssignment(spins=s_best), e0, candidates


def brute_force_classical(instance: DisorderInstance):
    """Exhaustive oracle over 2^(N-1) assignments (s_1 = +1 fixed by symmetry)."""
    n = instance.n_spins
    if n > _BRUTE_FORCE_MAX:
        raise ValueError(
            f"brute force limited to N <= {_BRUTE_FORCE_MAX}: enumeration of "
            f"2^(N-1) assignments is exponential in N"
        )
    vx = instance.xi * np.cos(instance.theta)
    vy = instance.xi * np.sin(instance.theta)
    total = 1 << (n - 1)
    best_e = np.inf
    best_code = 0
    chunk = 1 << 16
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.int64)
        a = np.full(codes.shape, vx[0])
        b = np.full(codes.shape, vy[0])
        for i in range(1, n):
            sgn = 1.0 - 2.0 * ((codes >> (i - 1)) & 1)
            a += vx[i] * sgn
            b += vy[i] * sgn
        e = -(a * a + b * b) / (2.0 * n)
        j = int(np.argmin(e))
        if e[j] < best_e:
            best_e = float(e[j])
            best_code = int(codes[j])
    spins = np.empty(n)
    spins[0] = 1.0
    for i in range(1, n):
        spins[i] = 1.0 - 2.0 * ((best_code >> (i - 1)) & 1)
    return SpinAssignment(spins=spins), best_e


def classical_gap(instance: DisorderInstance) -> float:
    """Gap between the lowest and second-lowest distinct candidate energies.

    Candidate energies closer than a relative 1e-12 are treated as one level
    (degenerate and inversion-symmetric copies); a fully degenerate instance
    has gap 0.  For gaussian disorder the ensemble median scales as 1/N.
    """
    if instance.n_spins < 2:
        raise ValueError("classical_gap requires N >= 2")
    _, _, candidates = solve_classical(instance)
    e = np.sort(candidates[:, 1])
    scale = max(abs(e[0]), 1e-300)
    distinct = [e[0]]
    for v in e[1:]:
        if v - distinct[-1] > _DEDUP_RTOL * scale:
            distinct.append(v)
            if len(distinct) == 2:
                break
    if len(distinct) < 2:
        return 0.0
    return float(distinct[1] - distinct[0])


# --- flat text serialization (the format every CLI subcommand reads) ---


def instance_to_text(instance: DisorderInstance) -> str:
    lines = [f"{instance.n_spins} {instance.dist} {instance.seed}"]
    for x, t in zip(instance.xi, instance.theta):
        lines.append(f"{x:.17g} {t:.17g}")
    return "\n".join(lines) + "\n"


def instance_from_text(text: str) -> DisorderInstance:
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    head = lines[0].split()
    if len(head) != 3:
        raise ValueError("instance header must be 'N dist seed'")
    n, dist, seed = int(head[0]), head[1], int(head[2])
    if len(lines) != n + 1:
        raise ValueError(f"expected {n} site lines, found {len(lines) - 1}")
    xi = np.empty(n)
    theta = np.empty(n)
    for i, ln in enumerate(lines[1:]):
        a, b = ln.split()
        xi[i] = float(a)
        theta[i] = float(b)
    if np.any(xi < 0.0):
        raise ValueError("xi magnitudes must be non-negative")
    xi.setflags(write=False)
    theta.setflags(write=False)
    return DisorderInstance(n_spins=n, dist=dist, xi=xi, theta=theta, seed=seed)


def write_instance(instance: DisorderInstance, path) -> None:
    with open(path, "w") as fh:
        fh.write(instance_to_text(instance))


def read_instance(path) -> DisorderInstance:
    with open(path) as fh:
        return instance_from_text(fh.read())
