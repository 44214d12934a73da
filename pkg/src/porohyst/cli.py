"""Command line entry point: ``porohyst {run,sweep,study,selftest}``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from . import _backend
from . import config as cfgmod
from . import constitutive as cst
from . import diagnostics as dg
from . import snapshot
from .solver import Simulation, SolverError, continuation_run

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_SELFTEST = 4


def _parser():
    ap = argparse.ArgumentParser(prog="porohyst", description="Hysteretic poro-thermo-mechanics simulator")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("run", "single simulation"),
        ("sweep", "continuation over the delta/R sequences"),
        ("study", "refinement study varying one parameter"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True, help="configuration file")
        p.add_argument("--out", default=None, help="output directory (overrides run.out; default ./out)")
        p.add_argument("--threads", type=int, default=0, help="kernel threads (numba backend)")
    p = sub.add_parser("selftest", help="operator property checks")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=0)
    return ap


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")


def _single(run_cfg, out_dir, label=None):
    sim = Simulation(run_cfg.params, run_cfg.solver)
    data = run_cfg.initial_data()
    state = snapshot.load(run_cfg.resume, sim) if run_cfg.resume else sim.init_state(data)
    snap_dir = os.path.join(out_dir, "snapshots")

    def on_snapshot(st):
        os.makedirs(snap_dir, exist_ok=True)
        snapshot.save(os.path.join(snap_dir, f"step_{st.step:07d}.snap"), st)

    res = sim.run(state=state, on_snapshot=on_snapshot)
    os.makedirs(out_dir, exist_ok=True)
    res.log.to_csv(os.path.join(out_dir, "diagnostics.csv"))
    summary = res.summary()
    if label is not None:
        summary["label"] = label
    _write_json(os.path.join(out_dir, "summary.json"), summary)
    snapshot.save(os.path.join(out_dir, "final.snap"), res.state)
    return res, summary


def _report(summary, out=print):
    out(
        f"steps={summary['steps']} t={summary['t_final']:.6g} "
        f"residual_max={summary['residual_max']:.3e} sup_p={summary['sup_p']:.6g} "
        f"theta_min={summary['theta_min']:.6g} floor_violations={summary['floor_violations']}"
    )


def cmd_run(run_cfg, out_dir):
    res, summary = _single(run_cfg, out_dir)
    _report(summary)
    return EXIT_OK


def cmd_sweep(run_cfg, out_dir):
    results, table = continuation_run(run_cfg.params, run_cfg.solver, run_cfg.initial_data())
    os.makedirs(out_dir, exist_ok=True)
    summaries = []
    for i, r in enumerate(results):
        sub = os.path.join(out_dir, f"run_{i:02d}")
        os.makedirs(sub, exist_ok=True)
        r.log.to_csv(os.path.join(sub, "diagnostics.csv"))
        s = r.summary()
        s.update({"delta": r.delta, "R": r.R})
        _write_json(os.path.join(sub, "summary.json"), s)
        summaries.append(s)
    cols = ["i", "delta_i", "delta_next", "R_i", "R_next", *dg.DISTANCE_KEYS]
    dg.write_csv(os.path.join(out_dir, "sweep.csv"), dg.STUDY_VERSION, cols, table)
    _write_json(os.path.join(out_dir, "summary.json"), {"runs": summaries, "distances": table})
    for s in summaries:
        print(f"delta={s['delta']:.6g} R={s['R']:.6g} sup_p={s['sup_p']:.6g} kr_max={s['kr_max']:.3e} "
              f"residual_max={s['residual_max']:.3e}")
    for row in table:
        print(f"d[{row['i']}] p_supL2={row['p_supL2']:.3e} grad_theta_L2L2={row['grad_theta_L2L2']:.3e}")
    return EXIT_OK


def cmd_study(run_cfg, out_dir):
    if not run_cfg.study_vary or len(run_cfg.study_values) < 2:
        raise cfgmod.ConfigError("study needs study.vary and at least two study.values")
    vary = run_cfg.study_vary
    results, labels = [], []
    for v in run_cfg.study_values:
        if vary in ("n", "nx"):
            changes = {"n": int(v)} if vary == "n" else {"nx": int(v), "ny": int(v)}
        else:
            changes = {vary: float(v)}
        solver = dataclasses.replace(run_cfg.solver, **changes)
        solver.validate(run_cfg.params)
        sub_cfg = dataclasses.replace(run_cfg, solver=solver)
        res, _ = _single(sub_cfg, os.path.join(out_dir, f"{vary}_{v:g}"), label=f"{vary}={v:g}")
        results.append(res)
        labels.append(f"{vary}={v:g}")
    rows = dg.convergence_study(results, labels, vary)
    os.makedirs(out_dir, exist_ok=True)
    dg.study_to_csv(os.path.join(out_dir, "study.csv"), rows)
    for row in rows:
        print(f"{row['from']} -> {row['to']}: p_supL2={row['p_supL2']:.3e} "
              f"order_p={row['order_p_supL2']:.3f}")
    return EXIT_OK


def main(argv=None):
    args = _parser().parse_args(argv)
    _backend.set_threads(args.threads)
    if args.command == "selftest":
        from . import selftest

        ok = selftest.run(seed=args.seed)
        print("selftest: " + ("all properties hold" if ok else "FAILURES"))
        return EXIT_OK if ok else EXIT_SELFTEST
    try:
        run_cfg = cfgmod.load(args.config)
    except cst.HypothesisViolation as exc:
        print(f"config rejected, violated condition {exc.clause}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (cfgmod.ConfigError, ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    handler = {"run": cmd_run, "sweep": cmd_sweep, "study": cmd_study}[args.command]
    out_dir = args.out or run_cfg.out or "out"
    try:
        return handler(run_cfg, out_dir)
    except cst.HypothesisViolation as exc:
        print(f"config rejected, violated condition {exc.clause}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except cfgmod.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"runtime error at step {exc.step}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - any other failure is a runtime failure
        print(f"runtime error: {exc!r}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
