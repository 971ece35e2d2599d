"""Periodic 1D Schroedinger solver for the ring model, symmetric sector only.

The annealing dynamics lives in the sector even under the global spin flip,
which on the ring is periodicity with period pi; solving directly on
[0, pi) enforces the sector exactly and halves the matrix.  Discretization
is the second-order centered stencil; dense LAPACK is used on small grids
(it resolves near-degenerate avoided-crossing gaps down to machine
precision), ARPACK shift-invert beyond.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg, sparse
from scipy.sparse.linalg import eigsh

from .ringmodel import PotentialGrid

_DENSE_MAX = 1200


@dataclass(frozen=True)
class SpectrumResult:
    gamma: float
    levels: np.ndarray  # ascending, k lowest symmetric-sector eigenvalues
    gap: float
    theta: np.ndarray
    ground_density: np.ndarray  # |psi_0|^2, sums to 1/dtheta
    theta_peak: float

    @property
    def dtheta(self) -> float:
        return self.theta[1] - self.theta[0]


@dataclass(frozen=True)
class GroundPosition:
    location: float  # circular mean on the period-pi circle (nan if undefined)
    spread: float  # circular standard deviation
    resultant: float
    defined: bool


@dataclass(frozen=True)
class GapStatistics:
    n: int
    median: float
    q25: float
    q75: float
    median_ci_low: float
    median_ci_high: float


def _solve_levels(diag, off, corner, k):
    """k lowest eigenpairs of the symmetric (tridiagonal + periodic corner) matrix."""
    n = diag.size
    if n <= _DENSE_MAX:
        h = np.diag(diag)
        idx = np.arange(n - 1)
        h[idx, idx + 1] = off
        h[idx + 1, idx] = off
        h[0, -1] = corner
        h[-1, 0] = corner
        w, v = linalg.eigh(h, subset_by_index=[0, k - 1])
        return w, v
    h = sparse.diags(
        [diag, np.full(n - 1, off), np.full(n - 1, off), [corner], [corner]],
        [0, 1, -1, n - 1, -(n - 1)],
        format="csc",
    )
    v0 = np.full(n, 1.0 / math.sqrt(n))
    sigma = float(diag.min()) - 1.0
    w, v = eigsh(h, k=k, sigma=sigma, which="LM", v0=v0, tol=0)
    order = np.argsort(w)
    return w[order], v[:, order]


def solve_ring(pg: PotentialGrid, k: int = 6) -> SpectrumResult:
    """Lowest k levels of -(1/2M) psi'' + V psi = E psi with period-pi wrap."""
    if k < 2:
        raise ValueError("need k >= 2 levels")
    if not (np.isfinite(pg.mass) and pg.mass > 0.0):
        raise ValueError("requires a finite positive effective mass (gamma > 0)")
    if not np.all(np.isfinite(pg.values)):
        raise ValueError("potential values are not finite")
    n = pg.n_points
    d = pg.dtheta
    c = 1.0 / (2.0 * pg.mass * d * d)
    w, v = _solve_levels(pg.values + 2.0 * c, -c, -c, k)
    psi0 = v[:, 0]
    density = psi0 * psi0
    density = density / (density.sum() * d)
    peak = float(pg.theta[int(np.argmax(density))])
    return SpectrumResult(
        gamma=pg.gamma, levels=w, gap=float(w[1] - w[0]),
        theta=pg.theta, ground_density=density, theta_peak=peak,
    )


def solve_interval(theta: np.ndarray, values: np.ndarray, mass: float, k: int = 6):
    """Dirichlet eigensolve on an interval grid; used for windowed sweeps.

    Returns (levels, ground_density, peak, spread).  Valid when the
    wavefunctions vanish at the interval ends (potential walls).
    """
    n = values.size
    d = float(theta[1] - theta[0])
    c = 1.0 / (2.0 * mass * d * d)
    w, v = linalg.eigh_tridiagonal(
        values + 2.0 * c, np.full(n - 1, -c), select="i", select_range=(0, k - 1)
    )
    psi0 = v[:, 0]
    density = psi0 * psi0
    density = density / (density.sum() * d)
    mean = float((theta * density).sum() * d)
    var = float((((theta - mean) ** 2) * density).sum() * d)
    peak = float(theta[int(np.argmax(density))])
    return w, density, peak, math.sqrt(max(var, 0.0))


def circular_distance(a: float, b: float) -> float:
    """Distance on the period-pi circle, in [0, pi/2]."""
    d = abs(a - b) % math.pi
    return min(d, math.pi - d)


def ground_position(sr: SpectrumResult, resultant_floor: float = 0.05) -> GroundPosition:
    """Circular mean and spread of the ground density on the period-pi circle.

    Angles are doubled to map the half-period onto a full circle; a resultant
    below `resultant_floor` flags the location as undefined (near-uniform
    density).
    """
    z = np.sum(sr.ground_density * np.exp(2j * sr.theta)) * sr.dtheta
    r = float(abs(z))
    if r < resultant_floor:
        return GroundPosition(location=float("nan"), spread=math.pi / 2.0,
                              resultant=r, defined=False)
    loc = float(np.angle(z) / 2.0) % math.pi
    spread = 0.5 * math.sqrt(max(-2.0 * math.log(r), 0.0))
    return GroundPosition(location=loc, spread=spread, resultant=r, defined=True)


def gap_statistics(ensemble, n_bootstrap: int = 2000, seed: int = 0) -> GapStatistics:
    """Median gap with quartiles and a bootstrap CI for the median."""
    gaps = np.array([sr.gap if isinstance(sr, SpectrumResult) else float(sr)
                     for sr in ensemble], dtype=float)
    if gaps.size == 0:
        raise ValueError("empty ensemble")
    med = float(np.median(gaps))
    q25, q75 = (float(q) for q in np.percentile(gaps, [25, 75]))
    rng = np.random.default_rng(seed)
    boot = np.median(
        gaps[rng.integers(0, gaps.size, size=(n_bootstrap, gaps.size))], axis=1
    )
    lo, hi = (float(q) for q in np.percentile(boot, [2.5, 97.5]))
    return GapStatistics(n=gaps.size, median=med, q25=q25, q75=q75,
                         median_ci_low=lo, median_ci_high=hi)
