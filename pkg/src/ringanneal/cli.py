"""Command-line interface.

Subcommands mirror the library layers: gen/classical for instances,
meanfield/potential/spectrum for single evaluations, sweep/exactdiag/xcheck
for gap tracking and the quantum oracle, langevin for the universal
pipeline, fit/report/run for ensembles.  Exit codes: 0 success, 1 task
failures inside a run, 2 configuration errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys

import numpy as np

from . import exactdiag, harness, langevin, meanfield
from . import sweep as sweep_mod
from .instance import (brute_force_classical, generate, read_instance,
                       solve_classical, write_instance)
from .ringmodel import random_potential
from .spectrum import solve_ring


def _write_csv(path, header, rows):
    text = ",".join(header) + "\n"
    for row in rows:
        text += ",".join(f"{x:.17g}" if isinstance(x, float) else str(x)
                         for x in row) + "\n"
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _cmd_gen(args):
    inst = generate(args.n, args.dist, args.seed)
    write_instance(inst, args.out)
    return 0


def _cmd_classical(args):
    inst = read_instance(args.instance)
    best, e0, candidates = solve_classical(inst)
    print(f"e0 {e0:.17g}")
    if args.brute_force:
        _, e0_bf = brute_force_classical(inst)
        print(f"e0_brute_force {e0_bf:.17g}")
    if args.candidates_out:
        _write_csv(args.candidates_out, ["angle", "energy"],
                   [(float(a), float(e)) for a, e in candidates])
    return 0


def _cmd_meanfield(args):
    start, stop, num = args.gamma_grid
    gammas = np.linspace(start, stop, int(num))
    rows = []
    for g in gammas:
        sol = meanfield.solve(float(g))
        rows.append((sol.gamma, sol.m_gamma, sol.v_min, sol.mass_per_spin))
    _write_csv(args.out, ["gamma", "m_gamma", "v_min", "mass_per_spin"], rows)
    return 0


def _cmd_potential(args):
    inst = read_instance(args.instance)
    pg = random_potential(inst, args.gamma, args.n_points)
    _write_csv(args.out, ["theta", "v"],
               list(zip(map(float, pg.theta), map(float, pg.values))))
    sidecar = {
        "gamma": pg.gamma,
        "m_gamma": meanfield.magnetization(pg.gamma),
        "mass": pg.mass if math.isfinite(pg.mass) else None,
        "offset": pg.offset,
        "seed": inst.seed,
        "n_spins": inst.n_spins,
    }
    with open(args.out + ".json", "w") as fh:
        json.dump(sidecar, fh, indent=1, sort_keys=True)
    return 0


def _cmd_spectrum(args):
    inst = read_instance(args.instance)
    pg = random_potential(inst, args.gamma, args.n_points)
    sr = solve_ring(pg, k=args.k)
    row = [sr.gamma] + [float(E) for E in sr.levels] + [sr.gap, sr.theta_peak]
    header = ["gamma"] + [f"e{i}" for i in range(len(sr.levels))] + \
        ["gap", "theta_peak"]
    _write_csv(args.out, header, [tuple(row)])
    return 0


def _cmd_sweep(args):
    inst = read_instance(args.instance)
    policy = sweep_mod.SweepPolicy()
    trace = sweep_mod.sweep_gap(inst, args.gamma_hi, args.gamma_lo, policy)
    events = sweep_mod.detect_bottlenecks(trace, policy)
    _write_csv(args.out_prefix + ".trace.csv",
               ["gamma", "gap", "theta_peak", "theta_spread"],
               list(zip(map(float, trace.gammas), map(float, trace.gaps),
                        map(float, trace.theta_peaks),
                        map(float, trace.theta_spreads))))
    _write_csv(args.out_prefix + ".events.csv",
               ["gamma_n", "delta_e", "delta_gamma", "delta_theta", "action",
                "c_exponent", "ratio_to_next"],
               [(e.gamma_n, e.delta_e, e.delta_gamma, e.delta_theta, e.action,
                 e.c_exponent, e.ratio_to_next) for e in events])
    return 0


def _cmd_exactdiag(args):
    inst = read_instance(args.instance)
    rows = []
    for g in args.gammas:
        w = exactdiag.lowest_levels(inst, g, args.k)
        rows.append(tuple([g] + [float(x) for x in w]))
    header = ["gamma"] + [f"e{i}" for i in range(args.k)]
    _write_csv(args.out, header, rows)
    return 0


def _cmd_xcheck(args):
    insts = [generate(n, "gaussian", harness.derive_seed(args.master_seed,
                                                         "xcheck", n, i))
             for n in args.n for i in range(args.seeds)]
    rep = exactdiag.ring_vs_exact_report(insts, args.gammas)
    rows = [(c.n_spins, c.gamma, c.median_rel_error, c.n_seeds)
            for c in rep.cells]
    _write_csv(args.out, ["n_spins", "gamma", "median_rel_error", "n_seeds"], rows)
    return 0


def _cmd_langevin(args):
    cfg = langevin.UniversalConfig(
        dln_gamma=args.dln_gamma, noise_terms=args.noise_terms,
        kernel=args.kernel, kappa=args.kappa, dtau=args.dtau,
        jump_floor=args.jump_floor, resonance_window=args.resonance_window,
    )
    config = harness.ExperimentConfig(
        kind="langevin-universal", master_seed=args.master_seed,
        output_dir=args.out_dir,
        params={"n_seeds": args.seeds, "decades": args.decades,
                "universal": dataclasses.asdict(cfg)},
    )
    record = harness.run(config, max_workers=args.workers)
    print(f"{record.status}: {len(record.tasks)} tasks, "
          f"outputs in {record.out_dir}")
    return 0 if record.status == "ok" else 1


def _cmd_fit(args):
    # recompute ensemble fits from a finished run directory
    manifest = os.path.join(args.run_dir, "manifest.json")
    if not os.path.exists(manifest):
        print("fit: no manifest.json in run dir", file=sys.stderr)
        return 2
    with open(manifest) as fh:
        m = json.load(fh)
    config = harness.config_from_dict(m["config"])
    statuses = {
        t: {"status": s,
            "path": os.path.join(args.run_dir, "tasks", t + ".json")}
        for t, s in m["tasks"].items()
    }
    harness._aggregate(config, args.run_dir, statuses)
    with open(os.path.join(args.run_dir, "fit.json")) as fh:
        print(fh.read())
    return 0


def _cmd_report(args):
    rep = harness.report(args.run_dir)
    print(rep["text"])
    return 0 if rep["ok"] else 1


def _cmd_run(args):
    try:
        config = harness.load_config(args.config)
    except harness.ConfigError as e:
        print(str(e), file=sys.stderr)
        return 2
    record = harness.run(config, max_workers=args.workers)
    print(f"{record.status}: {len(record.tasks)} tasks "
          f"({len(record.failed)} failed), outputs in {record.out_dir}")
    return 0 if record.status == "ok" else 1


def _gamma_grid(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected start:stop:num")
    return float(parts[0]), float(parts[1]), int(parts[2])


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ringanneal", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a disorder instance file")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--dist", choices=["gaussian", "bimodal"], default="gaussian")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(func=_cmd_gen)

    c = sub.add_parser("classical", help="exact classical optimum")
    c.add_argument("--instance", required=True)
    c.add_argument("--brute-force", action="store_true")
    c.add_argument("--candidates-out")
    c.set_defaults(func=_cmd_classical)

    m = sub.add_parser("meanfield", help="mean-field quantities on a gamma grid")
    m.add_argument("--gamma-grid", type=_gamma_grid, required=True,
                   metavar="START:STOP:NUM")
    m.add_argument("--out", default="-")
    m.set_defaults(func=_cmd_meanfield)

    v = sub.add_parser("potential", help="random potential on a theta grid")
    v.add_argument("--instance", required=True)
    v.add_argument("--gamma", type=float, required=True)
    v.add_argument("--n-points", type=int, default=None)
    v.add_argument("--out", required=True)
    v.set_defaults(func=_cmd_potential)

    s = sub.add_parser("spectrum", help="symmetric-sector ring spectrum")
    s.add_argument("--instance", required=True)
    s.add_argument("--gamma", type=float, required=True)
    s.add_argument("--k", type=int, default=6)
    s.add_argument("--n-points", type=int, default=None)
    s.add_argument("--out", default="-")
    s.set_defaults(func=_cmd_spectrum)

    w = sub.add_parser("sweep", help="gamma sweep with bottleneck detection")
    w.add_argument("--instance", required=True)
    w.add_argument("--gamma-hi", type=float, default=0.9)
    w.add_argument("--gamma-lo", type=float, default=None)
    w.add_argument("--out-prefix", required=True)
    w.set_defaults(func=_cmd_sweep)

    e = sub.add_parser("exactdiag", help="exact even-sector levels")
    e.add_argument("--instance", required=True)
    e.add_argument("--gammas", type=float, nargs="+", required=True)
    e.add_argument("--k", type=int, default=4)
    e.add_argument("--out", default="-")
    e.set_defaults(func=_cmd_exactdiag)

    x = sub.add_parser("xcheck", help="ring-vs-exact error table")
    x.add_argument("--n", type=int, nargs="+", default=[10, 14, 18])
    x.add_argument("--seeds", type=int, default=5)
    x.add_argument("--gammas", type=float, nargs="+",
                   default=[0.9, 0.8, 0.7, 0.6, 0.5])
    x.add_argument("--master-seed", type=int, default=1)
    x.add_argument("--out", default="-")
    x.set_defaults(func=_cmd_xcheck)

    l = sub.add_parser("langevin", help="universal rescaling-sweep pipeline")
    l.add_argument("--seeds", type=int, required=True)
    l.add_argument("--decades", type=float, default=3.0)
    l.add_argument("--master-seed", type=int, default=1)
    l.add_argument("--dln-gamma", type=float, default=0.01)
    l.add_argument("--dtau", type=float, default=1e-3)
    l.add_argument("--noise-terms", type=int, default=8)
    l.add_argument("--kernel", choices=["integral", "gaussian"],
                   default="integral")
    l.add_argument("--kappa", type=float, default=1.0)
    l.add_argument("--jump-floor", type=float, default=0.25)
    l.add_argument("--resonance-window", type=float, default=2.0)
    l.add_argument("--out-dir", default="")
    l.add_argument("--workers", type=int, default=None)
    l.set_defaults(func=_cmd_langevin)

    f = sub.add_parser("fit", help="recompute ensemble fits for a run directory")
    f.add_argument("--run-dir", required=True)
    f.set_defaults(func=_cmd_fit)

    r = sub.add_parser("report", help="observed-vs-expected report for a run")
    r.add_argument("--run-dir", required=True)
    r.set_defaults(func=_cmd_report)

    u = sub.add_parser("run", help="execute an experiment config")
    u.add_argument("config")
    u.add_argument("--workers", type=int, default=None)
    u.set_defaults(func=_cmd_run)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except harness.ConfigError as e:
        print(str(e), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
