"""Experiment orchestration: seeded ensembles, persistence, resumable runs, reports.

A run is a list of independent tasks (one per (N, seed) cell or per path
batch), each deterministic in a stream derived by counter-based hashing
from (master seed, kind, N, index); adding task kinds never perturbs
existing streams.  Task outputs are single JSON files written atomically,
so an interrupted run resumes by skipping finished files, and aggregation
is a pure function of the task files (byte-identical CSV output for equal
configs; timestamps live only in the manifest).
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import exactdiag, langevin, sweep as sweep_mod
from .instance import classical_gap, generate
from .ringmodel import random_potential
from .spectrum import solve_ring

VERSION = "0.1.0"
OUTPUT_ROOT_ENV = "RINGANNEAL_OUTPUT_ROOT"

KINDS = (
    "classical-scaling",
    "qcp-scaling",
    "glass-scaling",
    "bottleneck-census",
    "langevin-universal",
    "xcheck",
)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    master_seed: int
    n_list: tuple = ()
    seeds_per_n: int = 0
    output_dir: str = ""
    params: dict = field(default_factory=dict)

    def canonical(self) -> str:
        d = dataclasses.asdict(self)
        d["n_list"] = list(self.n_list)
        return json.dumps(d, sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]


@dataclass
class RunRecord:
    config: ExperimentConfig
    out_dir: str
    tasks: dict
    wall_time_s: float
    status: str  # "ok" or "partial"
    version: str = VERSION

    @property
    def failed(self) -> list:
        return [t for t, v in self.tasks.items() if v.get("status") != "ok"]


def _expect(cond: bool, path: str, message: str) -> None:
    if not cond:
        raise ConfigError(f"config.{path}: {message}")


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as e:
            raise ConfigError(f"config: invalid JSON at line {e.lineno}, "
                              f"column {e.colno}: {e.msg}") from e
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> ExperimentConfig:
    _expect(isinstance(raw, dict), "", "top level must be an object")
    kind = raw.get("kind")
    _expect(kind in KINDS, "kind", f"must be one of {', '.join(KINDS)}")
    _expect(isinstance(raw.get("master_seed"), int), "master_seed",
            "required integer")
    n_list = raw.get("n_list", [])
    seeds = raw.get("seeds_per_n", 0)
    if kind != "langevin-universal":
        _expect(isinstance(n_list, list) and len(n_list) > 0 and
                all(isinstance(n, int) and n > 0 for n in n_list),
                "n_list", "non-empty list of positive integers")
        _expect(isinstance(seeds, int) and seeds > 0, "seeds_per_n",
                "positive integer")
    params = raw.get("params", {})
    _expect(isinstance(params, dict), "params", "must be an object")
    for key, val in params.items():
        _expect(isinstance(val, (int, float, str, bool, list)),
                f"params.{key}", "scalar or list expected")
    if kind == "langevin-universal":
        _expect(isinstance(params.get("n_seeds"), int) and params["n_seeds"] > 0,
                "params.n_seeds", "positive integer required")
        _expect(isinstance(params.get("decades", 3.0), (int, float)),
                "params.decades", "number expected")
    out = raw.get("output_dir", "")
    _expect(isinstance(out, str), "output_dir", "string expected")
    return ExperimentConfig(kind=kind, master_seed=raw["master_seed"],
                            n_list=tuple(n_list), seeds_per_n=seeds,
                            output_dir=out, params=params)


def derive_seed(master_seed: int, *parts) -> int:
    """Counter-based 63-bit stream seed from (master seed, labels...)."""
    blob = json.dumps([master_seed, *parts], sort_keys=True).encode()
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "big") >> 1


# ----------------------------------------------------------------------
# Cell functions (one task each; module-level so they pickle)


def classical_gap_cell(n: int, seed: int) -> dict:
    inst = generate(n, "gaussian", seed)
    return {"gap": classical_gap(inst)}


def qcp_gap_cell(n: int, seed: int, a: float = 1.0) -> dict:
    gamma = 1.0 - a * float(n) ** (-2.0 / 3.0)
    inst = generate(n, "gaussian", seed)
    pg = random_potential(inst, gamma, n_points=512)
    return {"gap": solve_ring(pg, k=2).gap, "gamma": gamma}


def glass_gap_cell(n: int, seed: int, gamma: float = 0.5) -> dict:
    inst = generate(n, "gaussian", seed)
    pg = random_potential(inst, gamma, n_points=512)
    return {"gap": solve_ring(pg, k=2).gap, "gamma": gamma}


def census_cell(n: int, seed: int, dist: str = "gaussian",
                gamma_hi: float = 0.9, policy_overrides: dict | None = None) -> dict:
    inst = generate(n, dist, seed)
    policy = sweep_mod.SweepPolicy(**(policy_overrides or {}))
    trace = sweep_mod.sweep_gap(inst, gamma_hi, policy=policy)
    events = sweep_mod.detect_bottlenecks(trace, policy)
    return {
        "count": len(events),
        "gamma_lo": float(trace.gammas[-1]),
        "gamma_hi": float(trace.gammas[0]),
        "events": [dataclasses.asdict(e) for e in events],
    }


def xcheck_cell(n: int, seed: int, gammas) -> dict:
    inst = generate(n, "gaussian", seed)
    rep = exactdiag.ring_vs_exact_report([inst], gammas)
    cells = [dataclasses.asdict(c) for c in rep.cells]
    g_exact, g_ring = rep.minima[n][0]
    return {"cells": cells, "min_exact": g_exact, "min_ring": g_ring}


def langevin_cell(seed: int, decades: float, cfg_overrides: dict | None = None) -> dict:
    cfg = langevin.UniversalConfig(**(cfg_overrides or {}))
    events, diag = langevin.universal_events(seed, decades, cfg=cfg)
    return {
        "decades": decades,
        "events": [dataclasses.asdict(e) for e in events],
        "diagnostics": diag,
    }


_CELL_FUNCS = {
    "classical-scaling": classical_gap_cell,
    "qcp-scaling": qcp_gap_cell,
    "glass-scaling": glass_gap_cell,
    "bottleneck-census": census_cell,
    "xcheck": xcheck_cell,
}


def _task_list(config: ExperimentConfig):
    tasks = []
    if config.kind == "langevin-universal":
        for idx in range(config.params["n_seeds"]):
            tasks.append((f"seed{idx:05d}", idx))
    else:
        for n in config.n_list:
            for idx in range(config.seeds_per_n):
                tasks.append((f"N{n}_s{idx:04d}", (n, idx)))
    return tasks


def _execute_task(config: ExperimentConfig, task_id: str, spec) -> dict:
    p = config.params
    if config.kind == "langevin-universal":
        idx = spec
        seed = derive_seed(config.master_seed, config.kind, idx)
        return langevin_cell(seed, float(p.get("decades", 3.0)),
                             p.get("universal", None))
    n, idx = spec
    seed = derive_seed(config.master_seed, config.kind, n, idx)
    if config.kind == "classical-scaling":
        return classical_gap_cell(n, seed)
    if config.kind == "qcp-scaling":
        return qcp_gap_cell(n, seed, float(p.get("a", 1.0)))
    if config.kind == "glass-scaling":
        return glass_gap_cell(n, seed, float(p.get("gamma", 0.5)))
    if config.kind == "bottleneck-census":
        return census_cell(n, seed, p.get("dist", "gaussian"),
                           float(p.get("gamma_hi", 0.9)),
                           p.get("policy", None))
    if config.kind == "xcheck":
        return xcheck_cell(n, seed, p.get("gammas", [0.9, 0.8, 0.7, 0.6, 0.5]))
    raise ConfigError(f"config.kind: unhandled kind {config.kind}")


def _atomic_write(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _task_worker(args):
    config_canonical, task_id, spec, task_path = args
    config = config_from_dict(json.loads(config_canonical))
    try:
        result = _execute_task(config, task_id, spec)
        _atomic_write(task_path,
                      json.dumps({"status": "ok", "result": result}, sort_keys=True))
        return task_id, "ok", ""
    except Exception as e:  # fail-soft: record, keep the run going
        _atomic_write(task_path,
                      json.dumps({"status": "failed", "error": repr(e)},
                                 sort_keys=True))
        return task_id, "failed", repr(e)


def output_dir_for(config: ExperimentConfig) -> str:
    if config.output_dir:
        return config.output_dir
    root = os.environ.get(OUTPUT_ROOT_ENV, "runs")
    return os.path.join(root, f"{config.kind}-{config.config_hash()}")


def run(config: ExperimentConfig, max_workers: int | None = None,
        resume: bool = True) -> RunRecord:
    """Execute all tasks (resuming finished ones), aggregate, write the manifest."""
    t0 = time.time()
    out_dir = output_dir_for(config)
    task_dir = os.path.join(out_dir, "tasks")
    os.makedirs(task_dir, exist_ok=True)
    tasks = _task_list(config)
    statuses: dict[str, dict] = {}
    pending = []
    for task_id, spec in tasks:
        path = os.path.join(task_dir, task_id + ".json")
        if resume and os.path.exists(path):
            with open(path) as fh:
                prev = json.load(fh)
            statuses[task_id] = {"status": prev.get("status", "failed"),
                                 "path": path}
            continue
        pending.append((config.canonical(), task_id, spec, path))
    if pending:
        if max_workers is None:
            max_workers = min(os.cpu_count() or 1, 8)
        if max_workers <= 1 or len(pending) == 1:
            results = map(_task_worker, pending)
            for task_id, status, _err in results:
                statuses[task_id] = {
                    "status": status,
                    "path": os.path.join(task_dir, task_id + ".json"),
                }
        else:
            with ProcessPoolExecutor(max_workers=max_workers) as ex:
                for task_id, status, _err in ex.map(_task_worker, pending):
                    statuses[task_id] = {
                        "status": status,
                        "path": os.path.join(task_dir, task_id + ".json"),
                    }
    _aggregate(config, out_dir, statuses)
    status = "ok" if all(v["status"] == "ok" for v in statuses.values()) else "partial"
    record = RunRecord(config=config, out_dir=out_dir, tasks=statuses,
                       wall_time_s=time.time() - t0, status=status)
    manifest = {
        "config": json.loads(config.canonical()),
        "config_hash": config.config_hash(),
        "kind": config.kind,
        "version": VERSION,
        "status": status,
        "wall_time_s": record.wall_time_s,
        "tasks": {k: v["status"] for k, v in sorted(statuses.items())},
    }
    _atomic_write(os.path.join(out_dir, "manifest.json"),
                  json.dumps(manifest, indent=1, sort_keys=True))
    return record


def _load_ok_tasks(config: ExperimentConfig, statuses: dict):
    out = {}
    for task_id, v in statuses.items():
        if v["status"] != "ok":
            continue
        with open(v["path"]) as fh:
            out[task_id] = json.load(fh)["result"]
    return out


def _csv(rows, header) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(
            f"{x:.17g}" if isinstance(x, float) else str(x) for x in row))
    return "\n".join(lines) + "\n"


def _aggregate(config: ExperimentConfig, out_dir: str, statuses: dict) -> None:
    results = _load_ok_tasks(config, statuses)
    kind = config.kind
    if kind in ("classical-scaling", "qcp-scaling", "glass-scaling"):
        rows = []
        gaps_by_n: dict[int, list] = {}
        for n in config.n_list:
            for idx in range(config.seeds_per_n):
                tid = f"N{n}_s{idx:04d}"
                if tid in results:
                    g = results[tid]["gap"]
                    rows.append((n, idx, float(g)))
                    gaps_by_n.setdefault(n, []).append(float(g))
        _atomic_write(os.path.join(out_dir, "gaps.csv"),
                      _csv(rows, ["n_spins", "seed_index", "gap"]))
        fit = fit_median_slope(gaps_by_n)
        _atomic_write(os.path.join(out_dir, "fit.json"),
                      json.dumps(fit, indent=1, sort_keys=True))
    elif kind == "bottleneck-census":
        ev_rows = []
        counts_by_n: dict[int, list] = {}
        census: dict[int, list] = {}
        for n in config.n_list:
            for idx in range(config.seeds_per_n):
                tid = f"N{n}_s{idx:04d}"
                if tid not in results:
                    continue
                r = results[tid]
                counts_by_n.setdefault(n, []).append(r["count"])
                evs = [sweep_mod.BottleneckEvent(**e) for e in r["events"]]
                census.setdefault(n, []).append(evs)
                for e in r["events"]:
                    ev_rows.append((n, idx, e["gamma_n"], e["delta_e"],
                                    e["delta_gamma"], e["delta_theta"],
                                    e["action"], e["c_exponent"],
                                    e["ratio_to_next"]))
        _atomic_write(os.path.join(out_dir, "events.csv"), _csv(
            ev_rows, ["n_spins", "seed_index", "gamma_n", "delta_e",
                      "delta_gamma", "delta_theta", "action", "c_exponent",
                      "ratio_to_next"]))
        fit = census_fits(census, counts_by_n)
        _atomic_write(os.path.join(out_dir, "fit.json"),
                      json.dumps(fit, indent=1, sort_keys=True))
    elif kind == "langevin-universal":
        ev_rows = []
        per_seed_events = []
        for idx in range(config.params["n_seeds"]):
            tid = f"seed{idx:05d}"
            if tid not in results:
                continue
            evs = results[tid]["events"]
            per_seed_events.append(evs)
            for e in evs:
                ev_rows.append((idx, e["lngamma"], e["gamma_n"], e["jump"],
                                e["barrier"], e["c_exponent"],
                                e["ratio_to_next"]))
        _atomic_write(os.path.join(out_dir, "events.csv"), _csv(
            ev_rows, ["seed_index", "lngamma", "gamma_n", "jump", "barrier",
                      "c_exponent", "ratio_to_next"]))
        fit = universal_fits(per_seed_events,
                             float(config.params.get("decades", 3.0)))
        _atomic_write(os.path.join(out_dir, "fit.json"),
                      json.dumps(fit, indent=1, sort_keys=True))
        for name, col in (("jump", 3), ("c", 5)):
            vals = np.array([r[col] for r in ev_rows], dtype=float)
            hist_rows = _hist_rows(vals)
            _atomic_write(os.path.join(out_dir, f"hist_{name}.csv"),
                          _csv(hist_rows, ["bin_left", "bin_right", "count"]))
        ratios = np.array([r[6] for r in ev_rows if math.isfinite(r[6])])
        _atomic_write(os.path.join(out_dir, "hist_ratio.csv"),
                      _csv(_hist_rows(np.log(ratios) if ratios.size else ratios),
                           ["ln_bin_left", "ln_bin_right", "count"]))
    elif kind == "xcheck":
        rows = []
        med_err: dict[int, list] = {}
        minima: dict[int, list] = {}
        for n in config.n_list:
            for idx in range(config.seeds_per_n):
                tid = f"N{n}_s{idx:04d}"
                if tid not in results:
                    continue
                r = results[tid]
                for c in r["cells"]:
                    rows.append((n, idx, c["gamma"], c["median_rel_error"]))
                    med_err.setdefault(n, []).append(c["median_rel_error"])
                minima.setdefault(n, []).append((r["min_exact"], r["min_ring"]))
        _atomic_write(os.path.join(out_dir, "xcheck.csv"), _csv(
            rows, ["n_spins", "seed_index", "gamma", "rel_error"]))
        fit = {
            "median_error_by_n": {str(n): float(np.median(v))
                                  for n, v in sorted(med_err.items())},
            "minima_agreement": {
                str(n): float(np.median([abs(a - b) for a, b in v]))
                for n, v in sorted(minima.items())
            },
        }
        _atomic_write(os.path.join(out_dir, "fit.json"),
                      json.dumps(fit, indent=1, sort_keys=True))


def _hist_rows(vals: np.ndarray, bins: int = 40):
    if vals.size == 0:
        return []
    counts, edges = np.histogram(vals, bins=bins)
    return [(float(edges[i]), float(edges[i + 1]), int(counts[i]))
            for i in range(counts.size)]


def fit_median_slope(gaps_by_n: dict) -> dict:
    ns = sorted(gaps_by_n)
    x = np.log(np.array(ns, dtype=float))
    med = [float(np.median(gaps_by_n[n])) for n in ns]
    y = np.log(med)
    a = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    rng = np.random.default_rng(0)
    boots = []
    for _ in range(400):
        yb = np.log([np.median(rng.choice(gaps_by_n[n], len(gaps_by_n[n])))
                     for n in ns])
        boots.append(float(np.linalg.lstsq(a, yb, rcond=None)[0][0]))
    return {
        "n_list": ns,
        "medians": dict(zip(map(str, ns), med)),
        "slope": float(coef[0]),
        "slope_err": float(np.std(boots)),
        "seeds_per_n": {str(n): len(gaps_by_n[n]) for n in ns},
    }


def census_fits(census: dict, counts_by_n: dict) -> dict:
    fits = sweep_mod.fit_scalings(census=census, min_n_values=min(4, len(census)),
                                  min_seeds=1)
    gam = [e.gamma_n for n in census for row in census[n] for e in row]
    out = {
        "alpha_density": fits.alpha_density,
        "alpha_err": fits.alpha_err,
        "exponent_34": fits.exponent_34,
        "exponent_34_err": fits.exponent_34_err,
        "c_stats": fits.c_stats,
        "n_events": fits.n_events,
        "mean_counts": {str(n): float(np.mean(v))
                        for n, v in sorted(counts_by_n.items())},
    }
    if len(gam) >= 8:
        lo = min(gam) * 0.99
        hi = max(gam) * 1.01
        stat, p = sweep_mod.ks_loguniform(gam, lo, hi)
        out["loguniform_ks"] = {"stat": stat, "pvalue": p}
    return out


def universal_fits(per_seed_events: list, decades: float) -> dict:
    n_seeds = len(per_seed_events)
    total = sum(len(e) for e in per_seed_events)
    span = decades * math.log(10.0)
    out = {
        "n_seeds": n_seeds,
        "n_events": total,
        "alpha_per_ln_gamma": total / (n_seeds * span) if n_seeds else float("nan"),
    }
    # scale-freeness: ratio distributions per whole decade of ln gamma
    by_decade: dict[int, list] = {}
    for evs in per_seed_events:
        for e in evs:
            if not math.isfinite(e["ratio_to_next"]):
                continue
            dec = int(-e["lngamma"] // math.log(10.0))
            by_decade.setdefault(dec, []).append(math.log(e["ratio_to_next"]))
    out["ratios_per_decade"] = {str(k): len(v) for k, v in sorted(by_decade.items())}
    decs = sorted(by_decade)
    if len(decs) >= 2 and all(len(by_decade[d]) >= 5 for d in (decs[0], decs[-1])):
        from scipy import stats
        ks = stats.ks_2samp(by_decade[decs[0]], by_decade[decs[-1]])
        out["decade_ks"] = {"first": decs[0], "last": decs[-1],
                            "stat": float(ks.statistic), "pvalue": float(ks.pvalue)}
    return out


_EXPECTATIONS = {
    "classical-scaling": ("median classical gap slope vs ln N", -1.0, 0.2),
    "qcp-scaling": ("median QCP gap slope vs ln N", -1.0 / 3.0, 0.05),
    "glass-scaling": ("median glass gap slope vs ln N", -0.25, 0.05),
}


def report(run_dir: str) -> dict:
    """Collect fit outputs into observed-vs-expected rows (text + dict)."""
    manifest_path = os.path.join(run_dir, "manifest.json")
    if not os.path.exists(manifest_path):
        return {"rows": [], "text": "no data: missing manifest", "ok": False}
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    fit_path = os.path.join(run_dir, "fit.json")
    rows = []
    if os.path.exists(fit_path):
        with open(fit_path) as fh:
            fit = json.load(fh)
        kind = manifest["kind"]
        if kind in _EXPECTATIONS:
            label, expect, tol = _EXPECTATIONS[kind]
            obs = fit.get("slope", float("nan"))
            rows.append({"label": label, "observed": obs, "expected": expect,
                         "tolerance": tol,
                         "ok": bool(abs(obs - expect) <= tol)})
        elif kind == "bottleneck-census":
            a = fit.get("alpha_density", float("nan"))
            rows.append({"label": "bottleneck density alpha", "observed": a,
                         "expected": 0.15, "tolerance": 0.05,
                         "ok": bool(abs(a - 0.15) <= 0.05)})
            e = fit.get("exponent_34", float("nan"))
            rows.append({"label": "stretched-exponential exponent", "observed": e,
                         "expected": 0.75, "tolerance": 0.1,
                         "ok": bool(abs(e - 0.75) <= 0.1)})
        elif kind == "langevin-universal":
            a = fit.get("alpha_per_ln_gamma", float("nan"))
            rows.append({"label": "universal event density per ln gamma",
                         "observed": a, "expected": 0.15, "tolerance": 0.05,
                         "ok": bool(abs(a - 0.15) <= 0.05)})
            ks = fit.get("decade_ks")
            if ks:
                rows.append({"label": "decade-KS p-value (scale-freeness)",
                             "observed": ks["pvalue"], "expected": ">0.01",
                             "tolerance": 0.0, "ok": bool(ks["pvalue"] > 0.01)})
        elif kind == "xcheck":
            errs = fit.get("median_error_by_n", {})
            ns = sorted(int(k) for k in errs)
            dec = all(errs[str(ns[i + 1])] < errs[str(ns[i])]
                      for i in range(len(ns) - 1)) if len(ns) > 1 else False
            rows.append({"label": "ring-vs-exact error decreasing in N",
                         "observed": [errs[str(n)] for n in ns],
                         "expected": "monotone decrease", "tolerance": 0.0,
                         "ok": bool(dec)})
    if not rows:
        return {"rows": [], "text": "no data: run has no fit output",
                "ok": manifest.get("status") == "ok"}
    lines = [f"{'criterion':44s} {'observed':>14s} {'expected':>12s}  ok"]
    for r in rows:
        obs = r["observed"]
        obs_s = f"{obs:14.5g}" if isinstance(obs, float) else str(obs)[:14].rjust(14)
        lines.append(f"{r['label']:44s} {obs_s} {str(r['expected']):>12s}  "
                     f"{'yes' if r['ok'] else 'NO'}")
    ok = all(r["ok"] for r in rows) and manifest.get("status") == "ok"
    return {"rows": rows, "text": "\n".join(lines), "ok": ok}
