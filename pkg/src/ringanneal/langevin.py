"""Universal small-gamma pipeline: conditioned extremal process and its bottleneck statistics.

Near its global minimum the classical potential is a random-acceleration
process conditioned to stay positive.  Parametrically (per branch, with its
own clock tau):

    d nu = -U'(nu) dtau + dW,   d mu = nu dtau,   d theta = +- e^{2 mu/3} dtau,

where chi = e^mu is the conditioned landscape and U(nu) = -ln psi(nu) with
psi(nu) = (nu/6^(1/3)) Ai(nu^2/6^(2/3)) - Ai'(nu^2/6^(2/3)), started from
the equilibrium density rho ~ e^{-2U}.  Sweeping the transverse field is a
rescaling of (theta, chi) by (e^-eps, e^-1.5eps) per eps of ln gamma, with
branches extended at the far end as the window empties.  At each scale the
landscape is convolved with the finite-gamma smoothing kernel (plus
Brownian noise terms of Laguerre order alpha = 1, which vanish at gamma=0);
a bottleneck is a jump of the smoothed global minimum between resonant
competitors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import special

_CBRT6 = 6.0 ** (1.0 / 3.0)
_GAUSS_NODES = 96


# ----------------------------------------------------------------------
# Airy drift potential and equilibrium sampling


@dataclass(frozen=True)
class AiryPotentialTable:
    nu: np.ndarray
    u_values: np.ndarray
    u_prime: np.ndarray
    rho: np.ndarray  # normalized equilibrium density e^{-2U}
    cdf: np.ndarray


def _psi(nu):
    x = np.asarray(nu, dtype=float) / _CBRT6
    ai, aip, _, _ = special.airy(x * x)
    return x * ai - aip


def _psi_prime(nu):
    # d/dnu [x Ai(x^2) - Ai'(x^2)] with Ai''(z) = z Ai(z)
    x = np.asarray(nu, dtype=float) / _CBRT6
    ai, aip, _, _ = special.airy(x * x)
    return ((1.0 - 2.0 * x ** 3) * ai + 2.0 * x * x * aip) / _CBRT6


def build_airy_table(nu_min: float = -6.0, nu_max: float = 8.0,
                     n: int = 4097) -> AiryPotentialTable:
    """Tabulate U, U' and the equilibrium density on a uniform nu grid.

    psi must be strictly positive over the whole range; a non-positive value
    means the Airy sign convention got flipped and is a hard error.
    """
    nu = np.linspace(nu_min, nu_max, n)
    p = _psi(nu)
    if np.any(p <= 0.0):
        raise ValueError("psi(nu) <= 0 on the table: wrong Airy sign convention")
    u = -np.log(p)
    up = -_psi_prime(nu) / p
    rho = p * p
    rho = rho / np.trapezoid(rho, nu)
    cdf = np.concatenate(([0.0], np.cumsum(0.5 * (rho[1:] + rho[:-1]) * np.diff(nu))))
    cdf /= cdf[-1]
    return AiryPotentialTable(nu=nu, u_values=u, u_prime=up, rho=rho, cdf=cdf)


def mean_velocity(table: AiryPotentialTable) -> float:
    return float(np.trapezoid(table.nu * table.rho, table.nu))


def drift_minimum(table: AiryPotentialTable) -> float:
    return float(table.nu[int(np.argmin(table.u_values))])


def sample_equilibrium(table: AiryPotentialTable, seed: int, size: int | None = None):
    """Inverse-CDF draws from rho; scalar when size is None."""
    rng = np.random.default_rng(seed)
    u = rng.random(size if size is not None else 1)
    # cdf is monotone; fine table keeps inversion error far below KS scales
    nu = np.interp(u, table.cdf, table.nu)
    return nu if size is not None else float(nu[0])


def _drift(table: AiryPotentialTable, nu):
    return np.interp(nu, table.nu, table.u_prime)


def evolve_equilibrium_ensemble(table: AiryPotentialTable, nu0: np.ndarray,
                                total_tau: float, dtau: float, seed: int) -> np.ndarray:
    """Euler-Maruyama evolution of many independent nu paths; returns final values."""
    rng = np.random.default_rng(seed)
    nu = np.array(nu0, dtype=float)
    n_steps = int(round(total_tau / dtau))
    s = math.sqrt(dtau)
    for _ in range(n_steps):
        nu += -_drift(table, nu) * dtau + s * rng.standard_normal(nu.size)
    return nu


# ----------------------------------------------------------------------
# Branch integration


@dataclass(frozen=True)
class LangevinPath:
    branch: int  # +1 or -1
    tau: np.ndarray
    nu: np.ndarray
    mu: np.ndarray  # ln chi, left-rule integral of nu from mu0
    theta: np.ndarray  # signed, monotone; left-rule integral of +-e^{2mu/3}
    seed: int
    truncated: bool = False


def integrate_branch(table: AiryPotentialTable, nu0: float, branch: int,
                     tau_max: float, dtau: float = 1e-3, seed: int = 0,
                     mu0: float = -30.0, noise_scale: float = 1.0) -> LangevinPath:
    """One conditioned branch from the anchor chi(0) = e^{mu0} ~ 0.

    The anchor stands in for the chi(-infinity) = 0 boundary condition: the
    untracked past contributes chi below 1e-13 and is invisible at any scale
    the sweep reaches.  mu and theta are left-rule sums of the stored nu, so
    re-integration reproduces them exactly.
    """
    if branch not in (+1, -1):
        raise ValueError("branch must be +1 or -1")
    n = int(round(tau_max / dtau))
    rng = np.random.default_rng(seed)
    dw = noise_scale * math.sqrt(dtau) * rng.standard_normal(n)
    nu = np.empty(n + 1)
    nu[0] = nu0
    gnu, gup = table.nu, table.u_prime
    for k in range(n):
        nu[k + 1] = nu[k] - np.interp(nu[k], gnu, gup) * dtau + dw[k]
    tau = np.arange(n + 1) * dtau
    mu = mu0 + dtau * np.concatenate(([0.0], np.cumsum(nu[:-1])))
    truncated = False
    arg = 2.0 * mu / 3.0
    if np.any(arg > 700.0):
        cut = int(np.argmax(arg > 700.0))
        tau, nu, mu = tau[:cut], nu[:cut], mu[:cut]
        truncated = True
    speed = np.exp(2.0 * mu / 3.0)
    theta = branch * dtau * np.concatenate(([0.0], np.cumsum(speed[:-1])))
    return LangevinPath(branch=branch, tau=tau, nu=nu, mu=mu, theta=theta,
                        seed=seed, truncated=truncated)


# ----------------------------------------------------------------------
# Landscapes


@dataclass(frozen=True)
class Landscape:
    theta: np.ndarray  # ascending through 0
    chi: np.ndarray  # >= 0; exactly 0 at theta = 0


def landscape_from_branches(plus: LangevinPath, minus: LangevinPath) -> Landscape:
    """Join the two independent branches into chi(theta) around the minimum."""
    if plus.branch != +1 or minus.branch != -1:
        raise ValueError("need one + branch and one - branch")
    for p in (plus, minus):
        d = np.diff(p.theta)
        if not np.all(p.branch * d > 0.0):
            raise ValueError("branch theta must be strictly monotone")
    th = np.concatenate((minus.theta[::-1][:-1], [0.0], plus.theta[1:]))
    chi = np.concatenate((np.exp(minus.mu[::-1][:-1]), [0.0], np.exp(plus.mu[1:])))
    return Landscape(theta=th, chi=chi)


def rescale_step(ls: Landscape, dln_gamma: float) -> Landscape:
    """One sweep step gamma -> gamma e^{-dln_gamma}: theta and chi contract
    with exponents 1 and 3/2 (statistical self-similarity)."""
    if dln_gamma <= 0.0:
        raise ValueError("dln_gamma must be positive")
    e = math.exp(-dln_gamma)
    return Landscape(theta=ls.theta * e, chi=ls.chi * e ** 1.5)


def landscape_slope(ls: Landscape, theta_lo: float, theta_hi: float) -> float:
    """Log-log slope of chi(theta) on the positive side (3/2 for the
    conditioned process)."""
    m = (ls.theta >= theta_lo) & (ls.theta <= theta_hi) & (ls.chi > 0.0)
    if m.sum() < 4:
        raise ValueError("not enough points in the window")
    x = np.log(ls.theta[m])
    y = np.log(ls.chi[m])
    a = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    return float(coef[0])


# ----------------------------------------------------------------------
# Finite-gamma smoothing kernels


def _gauss_xi_nodes(hi: float = 10.0):
    x, w = np.polynomial.legendre.leggauss(_GAUSS_NODES)
    return 0.5 * hi * (x + 1.0), 0.5 * hi * w


def smoothing_kernel(offsets: np.ndarray, scale: float) -> np.ndarray:
    """Small-gamma smoothing kernel (unnormalized):

        f(t) = int_0^inf s^2 (s^2 + xi^2) xi^2 / (2 (s^2 + xi^2 t^2)^{3/2})
               e^{-xi^2/2} dxi,   s = scale.

    DC gain is 2 + O(s^2); callers normalize by the discrete sum.
    """
    xi, w = _gauss_xi_nodes()
    wexp = w * np.exp(-0.5 * xi * xi)
    t2 = np.asarray(offsets, dtype=float)[:, None] ** 2
    s2 = scale * scale
    integ = s2 * (s2 + xi ** 2) * xi ** 2 / (2.0 * (s2 + xi ** 2 * t2) ** 1.5)
    return integ @ wexp


def noise_kernel(offsets: np.ndarray, scale: float, n: int) -> np.ndarray:
    """Order-n Brownian-noise kernel (alpha = 1 Laguerre family, small-gamma form):

        g_n(t) = t/(2 sqrt(n+1)) int_0^inf xi^4 L_n^(1)(xi^2/2)
                 (s^2 + xi^2 t^2)^{-1/2} e^{-xi^2/2} dxi.

    Odd with zero total mass for n >= 1; vanishes identically as scale -> 0.
    """
    if n < 1:
        raise ValueError("noise kernels start at n = 1")
    xi, w = _gauss_xi_nodes()
    lag = special.eval_genlaguerre(n, 1, 0.5 * xi * xi)
    wexp = w * np.exp(-0.5 * xi * xi) * lag * xi ** 4
    t = np.asarray(offsets, dtype=float)
    s2 = scale * scale
    integ = (s2 + xi ** 2 * t[:, None] ** 2) ** -0.5
    return (t / (2.0 * math.sqrt(n + 1.0))) * (integ @ wexp)


def gaussian_kernel(offsets: np.ndarray, scale: float) -> np.ndarray:
    """Width-matched Gaussian substitute for the integral kernel (speed option)."""
    f0 = smoothing_kernel(np.array([0.0]), scale)[0]
    # numeric half width at half maximum of the integral kernel
    t = np.linspace(0.0, 8.0 * scale, 801)
    f = smoothing_kernel(t, scale)
    hwhm = t[int(np.searchsorted(-f, -0.5 * f0))]
    sigma = hwhm / math.sqrt(2.0 * math.log(2.0))
    x = np.asarray(offsets, dtype=float)
    return np.exp(-0.5 * (x / sigma) ** 2)


class NoiseField:
    """Brownian paths eta_n(theta), one per noise order, on an extendable grid.

    The realizations are pinned in the physical frame: a sweep rescale maps
    theta -> e^-eps theta and eta -> e^-eps/2 eta (Brownian scaling), fresh
    increments are drawn only when the span must grow, and decimation keeps
    the sample spacing bounded without touching the law of the kept points.
    """

    def __init__(self, n_terms: int, span: float, spacing: float, seed: int):
        self.n_terms = n_terms
        self.rng = np.random.default_rng(seed)
        m = max(2, int(math.ceil(2.0 * span / spacing)) + 1)
        self.theta = np.linspace(-span, span, m)
        steps = self.rng.standard_normal((n_terms, m - 1)) * np.sqrt(np.diff(self.theta))
        self.eta = np.concatenate(
            (np.zeros((n_terms, 1)), np.cumsum(steps, axis=1)), axis=1
        )

    def rescale(self, eps: float) -> None:
        self.theta = self.theta * math.exp(-eps)
        self.eta = self.eta * math.exp(-0.5 * eps)

    def ensure_span(self, span: float) -> None:
        spacing = self.theta[1] - self.theta[0] if self.theta.size > 1 else span
        while self.theta[-1] < span:
            d = spacing
            new_t = self.theta[-1] + d
            step = self.rng.standard_normal(self.n_terms) * math.sqrt(d)
            self.theta = np.append(self.theta, new_t)
            self.eta = np.concatenate((self.eta, (self.eta[:, -1] + step)[:, None]),
                                      axis=1)
        while self.theta[0] > -span:
            d = spacing
            new_t = self.theta[0] - d
            step = self.rng.standard_normal(self.n_terms) * math.sqrt(d)
            self.theta = np.concatenate(([new_t], self.theta))
            self.eta = np.concatenate(((self.eta[:, 0] + step)[:, None], self.eta),
                                      axis=1)

    def decimate_if_dense(self, min_spacing: float) -> None:
        while self.theta.size > 3 and (self.theta[1] - self.theta[0]) < 0.5 * min_spacing:
            self.theta = self.theta[::2]
            self.eta = self.eta[:, ::2]

    def values(self, n: int, at: np.ndarray) -> np.ndarray:
        return np.interp(at, self.theta, self.eta[n - 1])


@dataclass(frozen=True)
class SmoothedLandscape:
    scale: float
    theta: np.ndarray
    values: np.ndarray


def smooth_landscape(ls: Landscape, gamma_unit: float, *,
                     noise: NoiseField | None = None,
                     kernel: str = "integral",
                     grid_per_gamma: int = 32,
                     truncation: float = 12.0) -> SmoothedLandscape:
    """Effective potential at smoothing scale gamma_unit.

    Convolves chi with the finite-gamma kernel (normalized to unit DC gain)
    and, when a NoiseField is supplied, adds the n >= 1 Brownian terms with
    the relative weight fixed by the kernel family.  Wells closer than the
    kernel width merge; the minimum rises by O(gamma_unit^{3/2}).
    """
    h = gamma_unit / grid_per_gamma
    t = truncation * gamma_unit
    lo, hi = ls.theta[0] + t, ls.theta[-1] - t
    if hi - lo < 2.0 * h:
        raise ValueError("landscape span too small for this smoothing scale")
    core = np.diff(ls.theta)
    inside = (ls.theta[:-1] > lo) & (ls.theta[:-1] < hi)
    if np.any(inside) and np.max(core[inside]) > 0.5 * gamma_unit:
        raise ValueError("landscape under-resolved at the smoothing scale")
    n_out = int((hi - lo) / h) + 1
    out_grid = lo + h * np.arange(n_out)
    m_half = int(round(t / h))
    ext_grid = lo + h * np.arange(-m_half, n_out + m_half)
    chi_ext = np.interp(ext_grid, ls.theta, ls.chi)
    offs = h * np.arange(-m_half, m_half + 1)
    if kernel == "integral":
        ker = smoothing_kernel(offs, gamma_unit)
    elif kernel == "gaussian":
        ker = gaussian_kernel(offs, gamma_unit)
    else:
        raise ValueError(f"unknown kernel {kernel!r}")
    z = ker.sum() * h
    values = np.convolve(chi_ext, ker[::-1] * h, mode="valid") / z
    if noise is not None:
        noise.ensure_span(max(abs(ext_grid[0]), ext_grid[-1]))
        for n in range(1, noise.n_terms + 1):
            gk = noise_kernel(offs, gamma_unit, n)
            eta = noise.values(n, ext_grid)
            values = values + np.convolve(eta, gk[::-1] * h, mode="valid") / z
    return SmoothedLandscape(scale=gamma_unit, theta=out_grid, values=values)


def noise_term_report(gamma_unit: float, n_max: int = 8, span: float = 30.0,
                      seed: int = 0, grid_per_gamma: int = 32) -> dict:
    """RMS contribution of each Brownian order at one scale (convergence check)."""
    h = gamma_unit / grid_per_gamma
    nf = NoiseField(n_max, span, h, seed)
    offs = h * np.arange(-int(12 * grid_per_gamma), int(12 * grid_per_gamma) + 1)
    grid = np.arange(-span / 2, span / 2, h)
    z = smoothing_kernel(offs, gamma_unit).sum() * h
    out = {}
    for n in range(1, n_max + 1):
        gk = noise_kernel(offs, gamma_unit, n)
        eta = nf.values(n, np.arange(grid[0] - offs[-1], grid[-1] - offs[0] + h, h))
        conv = np.convolve(eta, gk[::-1] * h, mode="valid")[:grid.size] / z
        out[n] = float(np.std(conv))
    return out


# ----------------------------------------------------------------------
# Rescaling sweep and universal events


@dataclass(frozen=True)
class UniversalConfig:
    dln_gamma: float = 0.01
    kernel_scale: float = 1.0  # gamma in rescaled units
    window: float = 8.0  # analysis half-width, units of the scale
    grid_per_gamma: int = 32
    kernel_truncation: float = 12.0
    noise_terms: int = 8  # 0 disables the eta contributions
    kernel: str = "integral"
    jump_floor: float = 0.25  # units of the scale
    resonance_window: float = 2.0  # units of the scale
    kappa: float = 1.0
    dtau: float = 1e-3
    mu0: float = -30.0
    tau_block: int = 512  # SDE steps per extension block


@dataclass(frozen=True)
class UniversalEvent:
    lngamma: float
    gamma_n: float  # e^{lngamma}, rescaled units
    jump: float  # delta theta / gamma
    barrier: float  # in landscape (chi) units of the event frame
    c_exponent: float
    ratio_to_next: float = float("nan")


class _BranchState:
    """Streaming conditioned branch: holds (theta, mu) samples in the current
    frame and extends itself by integrating the nu SDE on demand."""

    def __init__(self, table, sign, seed, cfg: UniversalConfig):
        self.table = table
        self.sign = sign
        self.cfg = cfg
        self.rng = np.random.default_rng(seed)
        self.nu = float(sample_equilibrium(table, int(self.rng.integers(2 ** 62))))
        self.mu_end = cfg.mu0
        self.th_end = 0.0
        self.theta = np.array([0.0])  # magnitudes
        self.mu = np.array([cfg.mu0])

    def extend_to(self, span: float) -> None:
        cfg = self.cfg
        dt = cfg.dtau
        s = math.sqrt(dt)
        while self.th_end < span:
            dw = s * self.rng.standard_normal(cfg.tau_block)
            nu = np.empty(cfg.tau_block + 1)
            nu[0] = self.nu
            gnu, gup = self.table.nu, self.table.u_prime
            for k in range(cfg.tau_block):
                nu[k + 1] = nu[k] - np.interp(nu[k], gnu, gup) * dt + dw[k]
            mu = self.mu_end + dt * np.cumsum(nu[:-1])
            th = self.th_end + dt * np.cumsum(np.exp(2.0 * mu / 3.0))
            self.nu = float(nu[-1])
            self.mu_end = float(mu[-1])
            self.th_end = float(th[-1])
            self.theta = np.concatenate((self.theta, th))
            self.mu = np.concatenate((self.mu, mu))

    def rescale(self, eps: float) -> None:
        f = math.exp(-eps)
        self.theta = self.theta * f
        self.th_end *= f
        self.mu = self.mu - 1.5 * eps
        self.mu_end -= 1.5 * eps

    def prune(self, min_spacing: float, floor: float) -> None:
        th = self.theta
        if th.size < 16:
            return
        keep = np.empty(th.size, dtype=bool)
        keep[0] = True
        last = th[0]
        for j in range(1, th.size):
            if th[j] - last >= min_spacing or j == th.size - 1:
                keep[j] = True
                last = th[j]
            else:
                keep[j] = False
        keep[th < floor] = False
        keep[0] = True
        self.theta = th[keep]
        self.mu = self.mu[keep]

    def chi_at(self, at_abs: np.ndarray) -> np.ndarray:
        chi = np.exp(self.mu)
        chi[0] = 0.0  # anchor, stands in for chi -> 0
        return np.interp(at_abs, self.theta, chi)


def run_universal_sweep(seed: int, decades: float,
                        cfg: UniversalConfig | None = None):
    """Generator of SmoothedLandscape frames across `decades` of ln gamma.

    Frame k is the landscape smoothed at the fixed kernel scale after k
    rescale steps; its lngamma bookkeeping starts at 0 and decreases.
    """
    cfg = cfg or UniversalConfig()
    table = build_airy_table()
    ss = np.random.SeedSequence(seed)
    s_plus, s_minus, s_noise = ss.spawn(3)
    plus = _BranchState(table, +1, s_plus, cfg)
    minus = _BranchState(table, -1, s_minus, cfg)
    s = cfg.kernel_scale
    h = s / cfg.grid_per_gamma
    span = (cfg.window + cfg.kernel_truncation) * s * 1.05
    noise = None
    if cfg.noise_terms > 0:
        noise = NoiseField(cfg.noise_terms, span, h, s_noise)
    n_steps = int(round(decades * math.log(10.0) / cfg.dln_gamma))
    w = cfg.window * s
    t = cfg.kernel_truncation * s
    m_half = int(round(t / h))
    n_out = int(round(2.0 * w / h)) + 1
    out_grid = -w + h * np.arange(n_out)
    ext_grid = -w + h * np.arange(-m_half, n_out + m_half)
    offs = h * np.arange(-m_half, m_half + 1)
    if cfg.kernel == "integral":
        ker = smoothing_kernel(offs, s)
    else:
        ker = gaussian_kernel(offs, s)
    z = ker.sum() * h
    kw = ker[::-1] * h / z
    gks = [noise_kernel(offs, s, n)[::-1] * h / z
           for n in range(1, cfg.noise_terms + 1)]
    pos = ext_grid >= 0.0
    lngamma = 0.0
    for k in range(n_steps + 1):
        if k > 0:
            eps = cfg.dln_gamma
            plus.rescale(eps)
            minus.rescale(eps)
            if noise is not None:
                noise.rescale(eps)
                noise.decimate_if_dense(h)
            lngamma -= eps
        plus.extend_to(span)
        minus.extend_to(span)
        plus.prune(0.25 * h, 0.01 * h)
        minus.prune(0.25 * h, 0.01 * h)
        chi = np.empty(ext_grid.size)
        chi[pos] = plus.chi_at(ext_grid[pos])
        chi[~pos] = minus.chi_at(-ext_grid[~pos])
        values = np.convolve(chi, kw, mode="valid")
        if noise is not None:
            noise.ensure_span(span)
            for n, gk in enumerate(gks, start=1):
                eta = noise.values(n, ext_grid)
                values = values + np.convolve(eta, gk, mode="valid")
        yield SmoothedLandscape(scale=s, theta=out_grid, values=values), lngamma


def _parabolic_min(theta: np.ndarray, v: np.ndarray):
    j = int(np.argmin(v))
    if 0 < j < v.size - 1:
        d2 = v[j - 1] - 2.0 * v[j] + v[j + 1]
        if d2 > 0.0:
            off = 0.5 * (v[j - 1] - v[j + 1]) / d2
            return theta[j] + off * (theta[1] - theta[0]), j
    return float(theta[j]), j


def detect_universal_events(sweep, n_spins: int,
                            cfg: UniversalConfig | None = None):
    """Track the smoothed global minimum across a rescaling sweep.

    An event is a jump of the minimum location larger than the jump floor
    and inside the resonance window (units of the kernel scale).  The
    tunneling-exponent surrogate uses the formal substitutions
    M = N/(4 sqrt(pi) gamma^2) and Delta V = sqrt(N) * barrier, under which
    N cancels from c = kappa sqrt(M Delta V) |jump| / (gamma N)^{3/4}.
    """
    cfg = cfg or UniversalConfig()
    s = cfg.kernel_scale
    events: list[UniversalEvent] = []
    skipped_outside = 0
    prev = None
    prev_frame = None
    for frame, lngamma in sweep:
        p, j = _parabolic_min(frame.theta, frame.values)
        if prev is not None:
            jump = abs(p - prev)
            if jump > cfg.jump_floor * s:
                if jump <= cfg.resonance_window * s:
                    lo, hi = sorted((prev, p))
                    m = (frame.theta >= lo) & (frame.theta <= hi)
                    vlo = np.interp(lo, frame.theta, frame.values)
                    vhi = np.interp(hi, frame.theta, frame.values)
                    top = float(frame.values[m].max()) if np.any(m) else max(vlo, vhi)
                    barrier = max(top - 0.5 * (vlo + vhi), 0.0)
                    mass = n_spins / (4.0 * math.sqrt(math.pi) * s * s)
                    dv = math.sqrt(n_spins) * barrier
                    action = cfg.kappa * math.sqrt(mass * dv) * jump
                    c = action / (s * n_spins) ** 0.75
                    events.append(UniversalEvent(
                        lngamma=lngamma, gamma_n=math.exp(lngamma),
                        jump=jump / s, barrier=barrier, c_exponent=c,
                    ))
                else:
                    skipped_outside += 1
        prev = p
        prev_frame = frame
    for j in range(len(events) - 1):
        events[j] = replace(
            events[j], ratio_to_next=events[j].gamma_n / events[j + 1].gamma_n
        )
    return events, {"skipped_outside_window": skipped_outside}


def universal_events(seed: int, decades: float, n_spins: int = 10 ** 6,
                     cfg: UniversalConfig | None = None):
    """Convenience wrapper: run one sweep and return its events."""
    cfg = cfg or UniversalConfig()
    return detect_universal_events(run_universal_sweep(seed, decades, cfg),
                                   n_spins, cfg)


# ----------------------------------------------------------------------
# Persistence of the unconditioned random-acceleration process


@dataclass(frozen=True)
class PersistenceResult:
    exponent: float
    stderr: float
    horizons: np.ndarray
    survival: np.ndarray
    n_paths: int


def random_acceleration_survival(n_paths: int, horizons, seed: int = 0,
                                 dt0: float = 1e-3, dt_ratio: float = 0.002,
                                 noise_scale: float = 1.0, x0: float = 0.0,
                                 v0: float = 0.0, bridge: bool = True):
    """Survival fractions of x'' = noise started at the absorbing boundary.

    Steps grow proportionally to elapsed time (the process is self-similar).
    With bridge=True, sub-step boundary hits are sampled from the Gaussian
    bridge of the position increment (variance dt^3/3), which removes most
    of the discretization bias of the naive crossing test.
    """
    horizons = np.sort(np.asarray(horizons, dtype=float))
    rng = np.random.default_rng(seed)
    x = np.full(n_paths, float(x0))
    v = np.full(n_paths, float(v0))
    alive = np.ones(n_paths, dtype=bool)
    out = np.empty(horizons.size)
    t = 0.0
    hi = 0
    idx = np.arange(n_paths)
    while hi < horizons.size:
        dt = min(max(dt0, dt_ratio * t), horizons[-1] - t + dt0)
        n_alive = idx.size
        if n_alive == 0:
            out[hi:] = 0.0
            break
        dw = noise_scale * math.sqrt(dt) * rng.standard_normal(n_alive)
        x_old = x[idx]
        v_new = v[idx] + dw
        x_new = x_old + v[idx] * dt + 0.5 * dw * dt
        dead = x_new <= 0.0
        if bridge and noise_scale > 0.0:
            var = noise_scale ** 2 * dt ** 3 / 3.0
            both = ~dead & (x_old > 0.0)
            p_hit = np.exp(-2.0 * x_old[both] * x_new[both] / var)
            dead[both] |= rng.random(both.sum()) < p_hit
        x[idx] = x_new
        v[idx] = v_new
        alive[idx[dead]] = False
        idx = idx[~dead]
        t += dt
        while hi < horizons.size and t >= horizons[hi]:
            out[hi] = idx.size / n_paths
            hi += 1
    return horizons, out


def persistence_check(n_paths: int, horizons=None, seed: int = 0,
                      min_paths: int = 100_000, **kwargs) -> PersistenceResult:
    """Fit the survival decay exponent (1/4 for the conditioned-extremes class)."""
    if n_paths < min_paths:
        raise ValueError(f"need at least {min_paths} paths for a stable exponent fit")
    if horizons is None:
        horizons = np.geomspace(10.0, 1000.0, 9)
    h, s = random_acceleration_survival(n_paths, horizons, seed=seed, **kwargs)
    if np.any(s <= 0.0):
        raise RuntimeError("survival hit zero inside the fit window")
    x = np.log(h)
    y = np.log(s)
    a = np.vstack([x, np.ones_like(x)]).T
    coef, res, *_ = np.linalg.lstsq(a, y, rcond=None)
    resid = y - a @ coef
    dof = max(x.size - 2, 1)
    se = math.sqrt(float(resid @ resid) / dof / float(((x - x.mean()) ** 2).sum()))
    return PersistenceResult(exponent=-float(coef[0]), stderr=se,
                             horizons=h, survival=s, n_paths=n_paths)
