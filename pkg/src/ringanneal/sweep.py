"""Transverse-field sweeps: track the symmetric-sector gap, find bottlenecks, fit scalings.

The gamma grid is geometric (the landscape is self-similar in ln gamma) with
golden-section refinement around gap minima until the minimum value
converges.  Above a crossover the ring is solved whole (binned potential
splined onto a grid fine enough for the ground-state width); below it the
solve is restricted to a Dirichlet window of a few gamma around the tracked
ground-state location, which is what makes sweeps down to gamma ~ 1/N
affordable.  A bottleneck is a refined local gap minimum that is deep
against its log-neighborhood and accompanied by a jump of the ground-state
location.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from .instance import DisorderInstance, classical_gap
from .meanfield import effective_mass
from .ringmodel import PotentialTable
from .spectrum import _solve_levels, circular_distance, solve_interval

_GOLD = 0.5 * (3.0 - math.sqrt(5.0))


@dataclass(frozen=True)
class SweepPolicy:
    ratio: float = 0.99  # geometric gamma step
    k_levels: int = 6
    points_per_gamma: int = 32
    window_halfwidth: float = 6.0  # in units of gamma
    full_ring_window: float = 0.6  # full-ring solve once 2*hw*gamma > this * pi
    n_global: int = 512
    n_fine_max: int = 8192
    min_bracket: int = 5
    refine_rtol: float = 1e-2
    max_refine: int = 70
    refine_prefilter: float = 0.5
    # bottleneck definition (config-exposed)
    dip_ratio: float = 0.2
    jump_spread_factor: float = 3.0
    jump_gamma_factor: float = 0.5
    neighborhood_lngamma: float = 0.5
    ref_halfwidth_lngamma: float = 0.5 * math.log(10.0)
    flank_gap_factor: float = 4.0


@dataclass(frozen=True)
class GapTrace:
    n_spins: int
    gammas: np.ndarray  # strictly descending
    gaps: np.ndarray
    theta_peaks: np.ndarray
    theta_spreads: np.ndarray
    gamma_min_cutoff: float


@dataclass(frozen=True)
class BottleneckEvent:
    gamma_n: float
    delta_e: float
    delta_gamma: float
    delta_theta: float
    action: float  # |ln(delta_e / local reference gap)|
    c_exponent: float  # action / (gamma_n * N)^(3/4)
    ref_gap: float
    ratio_to_next: float = float("nan")  # gamma_n / gamma_{n+1}, filled post-sort


@dataclass(frozen=True)
class ScalingFits:
    qcp_slope: float = float("nan")
    qcp_err: float = float("nan")
    glass_slope: float = float("nan")
    glass_err: float = float("nan")
    alpha_density: float = float("nan")
    alpha_err: float = float("nan")
    exponent_34: float = float("nan")
    exponent_34_err: float = float("nan")
    c_stats: dict = field(default_factory=dict)
    n_events: int = 0


class _RingEvaluator:
    """Potential + eigensolve at one gamma, tracking the ground-state location."""

    def __init__(self, instance: DisorderInstance, policy: SweepPolicy):
        self.instance = instance
        self.policy = policy
        self.table = PotentialTable(instance, n_global=policy.n_global)
        self.spread_hint = math.pi / 4.0

    def evaluate(self, gamma: float, center_hint: float):
        p = self.policy
        hw = p.window_halfwidth * gamma
        if 2.0 * hw >= p.full_ring_window * math.pi:
            out = self._full_ring(gamma)
        else:
            out = self._window(gamma, center_hint, hw)
            # recenter once if the peak drifted near the window edge
            if circular_distance(out[1], center_hint) > hw - 2.0 * gamma:
                out = self._window(gamma, out[1], hw)
        self.spread_hint = out[2]
        return out

    def _full_ring(self, gamma: float):
        p = self.policy
        mass = effective_mass(gamma, self.instance.n_spins)
        coarse = self.table.global_values(gamma)
        n_fine = int(min(
            p.n_fine_max,
            max(1024, 12.0 * math.pi / max(self.spread_hint, 1e-6)),
        ))
        theta = np.arange(n_fine) * (math.pi / n_fine)
        if n_fine == coarse.size:
            values = coarse
        else:
            from scipy.interpolate import CubicSpline
            tg = np.append(self.table.theta_global, math.pi)
            vg = np.append(coarse, coarse[0])
            values = CubicSpline(tg, vg, bc_type="periodic")(theta)
        d = math.pi / n_fine
        c = 1.0 / (2.0 * mass * d * d)
        w, v = _solve_levels(values + 2.0 * c, -c, -c, p.k_levels)
        psi0 = v[:, 0]
        density = psi0 * psi0
        density /= density.sum() * d
        z = np.sum(density * np.exp(2j * theta)) * d
        r = min(abs(z), 1.0 - 1e-15)
        spread = 0.5 * math.sqrt(max(-2.0 * math.log(max(r, 1e-12)), 0.0))
        peak = float(theta[int(np.argmax(density))])
        return float(w[1] - w[0]), peak, min(spread, math.pi / 4.0)

    def _window(self, gamma: float, center: float, hw: float):
        p = self.policy
        n_win = 2 * p.window_halfwidth * p.points_per_gamma
        theta, values = self.table.window_values(gamma, center, hw, int(n_win))
        mass = effective_mass(gamma, self.instance.n_spins)
        w, _, peak, spread = solve_interval(theta, values, mass, k=p.k_levels)
        return float(w[1] - w[0]), peak % math.pi, spread


def gamma_min(instance: DisorderInstance) -> float:
    """Lower sweep cutoff: the lowest classical energy scale (gap), ~ 1/N."""
    return classical_gap(instance)


class _Trace:
    """Mutable (ln gamma)-keyed trace under construction."""

    def __init__(self, evaluator: _RingEvaluator):
        self.ev = evaluator
        self.lng: list[float] = []
        self.gap: list[float] = []
        self.peak: list[float] = []
        self.spread: list[float] = []
        self.base: list[bool] = []

    def add(self, x: float, center: float, base: bool) -> float:
        g, pk, sp = self.ev.evaluate(math.exp(x), center)
        self.lng.append(x); self.gap.append(g)
        self.peak.append(pk); self.spread.append(sp)
        self.base.append(base)
        return g

    def sorted_arrays(self):
        order = np.argsort(self.lng)[::-1]
        return (np.array(self.lng)[order], np.array(self.gap)[order],
                np.array(self.peak)[order], np.array(self.spread)[order],
                np.array(self.base)[order])


def sweep_gap(
    instance: DisorderInstance,
    gamma_hi: float,
    gamma_lo: float | None = None,
    policy: SweepPolicy | None = None,
) -> GapTrace:
    """Evaluate the gap on a geometric gamma grid, refined around local minima."""
    policy = policy or SweepPolicy()
    if gamma_lo is None:
        gamma_lo = min(max(gamma_min(instance), 1e-9), gamma_hi / 2.0)
    if not 0.0 < gamma_lo < gamma_hi < 1.0:
        raise ValueError("need 0 < gamma_lo < gamma_hi < 1")
    ev = _RingEvaluator(instance, policy)
    tr = _Trace(ev)
    step = -math.log(policy.ratio)
    n_base = int(math.ceil(math.log(gamma_hi / gamma_lo) / step)) + 1
    center = 0.0
    for j in range(n_base):
        x = math.log(gamma_hi) - step * j
        tr.add(x, center, base=True)
        if j == 0:  # settle the initial window center
            tr.lng.pop(); g0 = tr.gap.pop(); tr.spread.pop(); tr.base.pop()
            center = tr.peak.pop()
            tr.add(x, center, base=True)
        center = tr.peak[-1]

    _refine_minima(tr, policy)

    lng, gaps, peaks, spreads, _ = tr.sorted_arrays()
    return GapTrace(
        n_spins=instance.n_spins,
        gammas=np.exp(lng),
        gaps=gaps,
        theta_peaks=peaks,
        theta_spreads=spreads,
        gamma_min_cutoff=float(classical_gap(instance)) if instance.n_spins >= 2
        else gamma_lo,
    )


def _refine_minima(tr: _Trace, policy: SweepPolicy) -> None:
    """Golden-section refinement of every base-grid dip that could become an event.

    Runs until the dip minimum value converges (refine_rtol) or the budget
    ends; every evaluation stays in the trace, so the dip ends up bracketed
    by many points inside its width.
    """
    lng = np.array(tr.lng)
    gap = np.array(tr.gap)
    peak = np.array(tr.peak)
    order = np.argsort(lng)[::-1]
    lng, gap, peak = lng[order], gap[order], peak[order]
    n = lng.size
    for i in range(1, n - 1):
        if not (gap[i] < gap[i - 1] and gap[i] <= gap[i + 1]):
            continue
        near = np.abs(lng - lng[i]) <= policy.neighborhood_lngamma
        ref = np.median(gap[near & (gap > 2.0 * gap[i])]) if np.any(
            near & (gap > 2.0 * gap[i])) else np.median(gap[near])
        if gap[i] > policy.refine_prefilter * ref:
            continue
        # golden section on f(x) = gap(e^x), ascending bracket
        a, b, c = lng[i + 1], lng[i], lng[i - 1]
        fb = gap[i]
        center = peak[i]
        budget = policy.max_refine
        x1 = a + _GOLD * (c - a)
        x2 = c - _GOLD * (c - a)
        f1 = tr.add(x1, center, base=False); budget -= 1
        f2 = tr.add(x2, center, base=False); budget -= 1
        pts = sorted([(a, np.inf), (x1, f1), (b, fb), (x2, f2), (c, np.inf)])
        lo, hi = a, c
        best = min(f1, f2, fb)
        while budget > 0:
            xs = [p[0] for p in pts]
            fs = [p[1] for p in pts]
            j = int(np.argmin(fs))
            lo = xs[max(j - 1, 0)]
            hi = xs[min(j + 1, len(xs) - 1)]
            if hi - lo < 1e-11:
                break
            xa = lo + _GOLD * (hi - lo)
            xb = hi - _GOLD * (hi - lo)
            fa = tr.add(xa, center, base=False)
            fbb = tr.add(xb, center, base=False)
            budget -= 2
            pts.extend([(xa, fa), (xb, fbb)])
            pts.sort()
            new_best = min(best, fa, fbb)
            if new_best > 0 and abs(best - new_best) < policy.refine_rtol * new_best \
                    and best < np.inf:
                best = new_best
                break
            best = new_best


def detect_bottlenecks(trace: GapTrace, policy: SweepPolicy | None = None):
    """Local gap minima that are deep and carry a ground-location jump.

    Thresholds are ratio-based, so the event set is invariant under a
    uniform rescaling of all gap values.  Reference gaps are medians of
    lngamma-binned medians, which keeps dense refinement clusters from
    dominating.
    """
    policy = policy or SweepPolicy()
    lng = np.log(trace.gammas)
    gaps = trace.gaps
    n = gaps.size
    base_step = -math.log(policy.ratio)

    def binned_reference(x0: float, halfwidth: float, exclude_mask):
        sel = (np.abs(lng - x0) <= halfwidth) & ~exclude_mask
        if not np.any(sel):
            return float("nan")
        bins = np.floor((lng[sel] - x0) / base_step).astype(int)
        meds = [np.median(gaps[sel][bins == b]) for b in np.unique(bins)]
        return float(np.median(meds))

    events: list[BottleneckEvent] = []
    for i in range(1, n - 1):
        if not (gaps[i] < gaps[i - 1] and gaps[i] <= gaps[i + 1]):
            continue
        dipzone = gaps <= 2.0 * gaps[i]
        med_near = binned_reference(lng[i], policy.neighborhood_lngamma, dipzone)
        if not (np.isfinite(med_near) and gaps[i] < policy.dip_ratio * med_near):
            continue
        # contiguous region with gap <= 2 * minimum, then interpolated crossings
        lo_j = i
        while lo_j + 1 < n and gaps[lo_j + 1] <= 2.0 * gaps[i]:
            lo_j += 1
        hi_j = i
        while hi_j - 1 >= 0 and gaps[hi_j - 1] <= 2.0 * gaps[i]:
            hi_j -= 1
        if lo_j + 1 >= n or hi_j - 1 < 0:
            continue

        def crossing(j_in, j_out):
            g0, g1 = gaps[j_in], gaps[j_out]
            x0, x1 = lng[j_in], lng[j_out]
            t = (2.0 * gaps[i] - g0) / (g1 - g0)
            return x0 + t * (x1 - x0)

        x_lo = crossing(lo_j, lo_j + 1)
        x_hi = crossing(hi_j, hi_j - 1)
        delta_gamma = math.exp(x_hi) - math.exp(x_lo)
        flank_gap = policy.flank_gap_factor * gaps[i]
        f_lo = lo_j + 1
        while f_lo + 1 < n and gaps[f_lo] < flank_gap and \
                lng[i] - lng[f_lo + 1] <= policy.neighborhood_lngamma:
            f_lo += 1
        f_hi = hi_j - 1
        while f_hi - 1 >= 0 and gaps[f_hi] < flank_gap and \
                lng[f_hi - 1] - lng[i] <= policy.neighborhood_lngamma:
            f_hi -= 1
        jump = circular_distance(trace.theta_peaks[f_hi], trace.theta_peaks[f_lo])
        spread_ref = max(trace.theta_spreads[f_hi], trace.theta_spreads[f_lo])
        gamma_n = trace.gammas[i]
        if jump <= max(policy.jump_spread_factor * spread_ref,
                       policy.jump_gamma_factor * gamma_n):
            continue
        ref_gap = binned_reference(lng[i], policy.ref_halfwidth_lngamma, dipzone)
        if not np.isfinite(ref_gap):
            ref_gap = med_near
        action = abs(math.log(gaps[i] / ref_gap))
        events.append(BottleneckEvent(
            gamma_n=float(gamma_n), delta_e=float(gaps[i]),
            delta_gamma=float(delta_gamma), delta_theta=float(jump),
            action=action,
            c_exponent=action / (gamma_n * trace.n_spins) ** 0.75,
            ref_gap=ref_gap,
        ))
    events.sort(key=lambda e: -e.gamma_n)
    # de-duplicate refinement echoes of the same crossing
    merged: list[BottleneckEvent] = []
    for e in events:
        if merged and abs(math.log(merged[-1].gamma_n / e.gamma_n)) < 2.0 * base_step:
            if e.delta_e < merged[-1].delta_e:
                merged[-1] = e
            continue
        merged.append(e)
    for j in range(len(merged) - 1):
        merged[j] = replace(merged[j],
                            ratio_to_next=merged[j].gamma_n / merged[j + 1].gamma_n)
    return merged


def lz_failure(delta_e: float, delta_gamma: float, rate: float, n_runs: int) -> float:
    """Probability that all n_runs anneals miss the ground state at one crossing:
    p = exp(-pi dE dGamma / (4 rate))^n."""
    if delta_e <= 0.0 or delta_gamma <= 0.0 or n_runs < 1:
        raise ValueError("delta_e, delta_gamma must be positive and n_runs >= 1")
    if rate <= 0.0:
        raise ValueError("annealing rate must be positive")
    return math.exp(-math.pi * delta_e * delta_gamma / (4.0 * rate)) ** n_runs


def _slope_fit(x: np.ndarray, y: np.ndarray):
    a = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    return float(coef[0]), float(coef[1])


def _median_slope(gaps_by_n: dict, rng) -> tuple[float, float]:
    ns = sorted(gaps_by_n)
    x = np.log(np.array(ns, dtype=float))
    y = np.log([np.median(gaps_by_n[n]) for n in ns])
    slope, _ = _slope_fit(x, y)
    boots = []
    for _ in range(400):
        yb = np.log([
            np.median(rng.choice(gaps_by_n[n], size=len(gaps_by_n[n]))) for n in ns
        ])
        boots.append(_slope_fit(x, yb)[0])
    return slope, float(np.std(boots))


def fit_scalings(
    census: dict | None = None,
    qcp_gaps: dict | None = None,
    glass_gaps: dict | None = None,
    *,
    action_floor: float = 1.0,
    action_ceiling: float = 18.0,
    min_n_values: int = 4,
    min_seeds: int = 50,
    seed: int = 0,
) -> ScalingFits:
    """Least-squares scaling fits with bootstrap errors.

    census: {N: [events per instance, one list per seed]}; qcp_gaps /
    glass_gaps: {N: [gap per seed]}.  The stretched-exponential fit uses
    only events whose action sits between `action_floor` (resolved dip) and
    `action_ceiling` (gaps above the eigensolver floor).
    """
    for part, name in ((census, "census"), (qcp_gaps, "qcp"), (glass_gaps, "glass")):
        if part is not None:
            if len(part) < min_n_values:
                raise ValueError(f"{name}: need >= {min_n_values} N values")
            for n, rows in part.items():
                if len(rows) < min_seeds:
                    raise ValueError(f"{name}: N={n} has fewer than {min_seeds} seeds")
    rng = np.random.default_rng(seed)
    out = ScalingFits()
    if qcp_gaps is not None:
        s, e = _median_slope(qcp_gaps, rng)
        out = replace(out, qcp_slope=s, qcp_err=e)
    if glass_gaps is not None:
        s, e = _median_slope(glass_gaps, rng)
        out = replace(out, glass_slope=s, glass_err=e)
    if census is not None:
        ns = sorted(census)
        x = np.log(np.array(ns, dtype=float))
        counts = {n: np.array([len(ev) for ev in census[n]], float) for n in ns}
        y = np.array([counts[n].mean() for n in ns])
        alpha, _ = _slope_fit(x, y)
        boots = []
        for _ in range(400):
            yb = np.array([
                rng.choice(counts[n], size=counts[n].size).mean() for n in ns
            ])
            boots.append(_slope_fit(x, yb)[0])
        pool = [(n, ev) for n in ns for row in census[n] for ev in row]
        cvals = np.array([ev.c_exponent for _, ev in pool])
        sel = [(n, ev) for n, ev in pool
               if action_floor <= ev.action <= action_ceiling]
        e34 = e34_err = float("nan")
        if len(sel) >= 8:
            lx = np.array([math.log(ev.gamma_n * n) for n, ev in sel])
            ly = np.array([math.log(ev.action) for _, ev in sel])
            e34, _ = _slope_fit(lx, ly)
            bs = []
            for _ in range(400):
                idx = rng.integers(0, len(sel), size=len(sel))
                bs.append(_slope_fit(lx[idx], ly[idx])[0])
            e34_err = float(np.std(bs))
        out = replace(
            out, alpha_density=alpha, alpha_err=float(np.std(boots)),
            exponent_34=e34, exponent_34_err=e34_err,
            n_events=len(pool),
            c_stats={
                "mean": float(cvals.mean()) if cvals.size else float("nan"),
                "median": float(np.median(cvals)) if cvals.size else float("nan"),
                "std": float(cvals.std()) if cvals.size else float("nan"),
                "n": int(cvals.size),
            },
        )
    return out


def ks_loguniform(gammas, lo: float, hi: float):
    """KS statistic of event locations against the log-uniform law on [lo, hi]."""
    g = np.sort(np.asarray(gammas, dtype=float))
    u = (np.log(g) - math.log(lo)) / (math.log(hi) - math.log(lo))
    res = stats.kstest(u, "uniform")
    return float(res.statistic), float(res.pvalue)
