"""Brute-force quantum oracle: the full transverse-field Hamiltonian at small N.

    H = -(1/2) sum_ik J_ik sz_i sz_k - gamma sum_i sx_i,
    J_ik = (1/N) xi_i . xi_k   (self-coupling i = k included)

H commutes with the global flip P = prod_i sx_i; states are paired with
their complements and the sector blocks built directly, so the even
(symmetric) block has dimension 2^(N-1).  Memory is O(N 2^(N-1)); N is
capped at 20.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg, sparse
from scipy.sparse.linalg import eigsh

from .instance import DisorderInstance
from .ringmodel import random_potential
from .spectrum import solve_ring

_N_MAX = 20
_K_MAX = 8
_DENSE_MAX_N = 13


@dataclass(frozen=True)
class QuantumGapCurve:
    gammas: np.ndarray
    gaps: np.ndarray  # symmetric-sector E1 - E0
    e0: np.ndarray


@dataclass(frozen=True)
class RingVsExactCell:
    n_spins: int
    gamma: float
    median_rel_error: float
    n_seeds: int


@dataclass(frozen=True)
class RingVsExactReport:
    cells: tuple  # RingVsExactCell per (N, gamma)
    median_error_by_n: dict  # N -> median relative gap error over all cells
    minima: dict  # N -> list of (gamma_at_exact_min, gamma_at_ring_min)


def _sector_hamiltonian(instance: DisorderInstance, gamma: float, parity: int):
    """Sparse Hamiltonian block in the paired basis (representatives s_1 = +1).

    parity +1: even sector (contains the ground state); -1: odd.
    """
    n = instance.n_spins
    dim = 1 << (n - 1)
    codes = np.arange(dim, dtype=np.int64)
    vx = instance.xi * np.cos(instance.theta)
    vy = instance.xi * np.sin(instance.theta)
    a = np.full(dim, vx[0])
    b = np.full(dim, vy[0])
    for i in range(1, n):
        sgn = 1.0 - 2.0 * ((codes >> (i - 1)) & 1)
        a += vx[i] * sgn
        b += vy[i] * sgn
    diag = -(a * a + b * b) / (2.0 * n)

    rows = [codes] * n
    cols = [codes ^ (1 << (i - 1)) for i in range(1, n)]
    cols.append((~codes) & (dim - 1))  # flipping spin 1 lands on the complement class
    amps = [np.full(dim, -gamma)] * (n - 1)
    amps.append(np.full(dim, -gamma * parity))
    h = sparse.coo_matrix(
        (np.concatenate(amps), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim, dim),
    ).tocsr()
    return h + sparse.diags(diag), dim


def sector_levels(instance: DisorderInstance, gamma: float, k: int,
                  parity: int = +1, v0: np.ndarray | None = None) -> np.ndarray:
    """k lowest eigenvalues in the chosen flip sector (k capped at the block size)."""
    n = instance.n_spins
    if n > _N_MAX:
        raise ValueError(
            f"N <= {_N_MAX} required: the sector block alone holds "
            f"O(N 2^(N-1)) nonzeros and exhausts memory beyond that"
        )
    if k > _K_MAX:
        raise ValueError(f"k <= {_K_MAX}")
    h, dim = _sector_hamiltonian(instance, gamma, parity)
    k_eff = min(k, dim)
    if n <= _DENSE_MAX_N or k_eff >= dim - 1:
        w = linalg.eigvalsh(h.toarray())
        return w[:k_eff]
    if v0 is None:
        v0 = np.full(dim, 1.0 / math.sqrt(dim))
    w = eigsh(h, k=k_eff, which="SA", v0=v0, tol=1e-12,
              return_eigenvectors=False)
    return np.sort(w)


def lowest_levels(instance: DisorderInstance, gamma: float, k: int) -> np.ndarray:
    """Lowest k eigenvalues in the even (symmetric) sector, ascending."""
    return sector_levels(instance, gamma, k, parity=+1)


def gap_curve(instance: DisorderInstance, gammas, k: int = 2) -> QuantumGapCurve:
    """Even-sector gap and ground energy at each gamma, in the given order."""
    gammas = np.asarray(list(gammas), dtype=float)
    gaps = np.empty(gammas.size)
    e0 = np.empty(gammas.size)
    for j, g in enumerate(gammas):
        w = lowest_levels(instance, float(g), k)
        e0[j] = w[0]
        gaps[j] = w[1] - w[0] if w.size > 1 else 0.0
    return QuantumGapCurve(gammas=gammas, gaps=gaps, e0=e0)


def ring_vs_exact_report(instances, gammas) -> RingVsExactReport:
    """Relative gap error of the ring reduction against exact diagonalization.

    The mapping is leading-order in N, so only the trend matters: the
    per-N median error should fall as N grows, and the gap-minimum
    locations should agree.
    """
    gammas = np.asarray(list(gammas), dtype=float)
    by_n: dict[int, list[np.ndarray]] = {}
    minima: dict[int, list] = {}
    for inst in instances:
        exact = gap_curve(inst, gammas)
        ring = np.empty(gammas.size)
        for j, g in enumerate(gammas):
            pg = random_potential(inst, float(g))
            ring[j] = solve_ring(pg, k=2).gap
        rel = np.abs(ring - exact.gaps) / np.abs(exact.gaps)
        by_n.setdefault(inst.n_spins, []).append(rel)
        minima.setdefault(inst.n_spins, []).append(
            (float(gammas[int(np.argmin(exact.gaps))]),
             float(gammas[int(np.argmin(ring))]))
        )
    cells = []
    med_by_n = {}
    for n, rows in sorted(by_n.items()):
        mat = np.vstack(rows)
        for j, g in enumerate(gammas):
            cells.append(RingVsExactCell(
                n_spins=n, gamma=float(g),
                median_rel_error=float(np.median(mat[:, j])), n_seeds=mat.shape[0],
            ))
        med_by_n[n] = float(np.median(mat))
    return RingVsExactReport(cells=tuple(cells), median_error_by_n=med_by_n,
                             minima=minima)
