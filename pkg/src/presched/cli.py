"""Command-line entry point.

Subcommands: gen (write an instance JSON), run (execute one policy on an
instance, print metrics JSON), sweep (run a sweep config to CSV), opt
(print the optimum and a certificate trace), validate (check a trace file).
Metrics and results go to stdout as JSON; diagnostics go to stderr.  Exit
codes: 0 success, 1 usage error, 2 infeasible input.

The environment variable PRESCHED_SEED overrides --seed when set.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

from . import bench
from .errors import Infeasible, InfeasibleJob, PreschedError
from .metrics import compute_metrics
from .model import (
    load_instance,
    load_trace,
    save_instance,
    save_trace,
    trace_to_dict,
)
from .optimum import opt_single_machine, opt_unrelated_matching
from .sim import simulate
from .snap import epoch_preemptions, write_epoch_log
from .validate import validate_trace

ALGORITHMS = (
    "pmlf",
    "pmlf-identical",
    "pmlf-adapted",
    "snap",
    "snap-greedy",
    "snap-2stage",
    "hybrid:C",
    "blind",
    "doubling",
    "rr",
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="presched",
        description="Prediction-aware scheduling laboratory",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a benchmark instance JSON")
    gen.add_argument("--out", required=True, help="output instance path")
    gen.add_argument("--m", type=int, default=10, help="machine count")
    gen.add_argument("--n", type=int, default=100, help="job count")
    gen.add_argument("--special-frac", type=float, default=0.2,
                     help="fraction of machine-restricted jobs")
    gen.add_argument("--special-machines", type=int, default=2,
                     help="machines special jobs may use")
    gen.add_argument("--R", type=float, default=1.0,
                     help="prediction error parameter (>= 1)")
    gen.add_argument("--seed", type=int, default=0, help="generator seed")

    run = sub.add_parser("run", help="simulate one policy on an instance")
    run.add_argument("--algo", required=True,
                     help="one of: " + ", ".join(ALGORITHMS))
    run.add_argument("--instance", required=True, help="instance JSON path")
    run.add_argument("--delta", type=float, default=1.0, help="queue growth factor")
    run.add_argument("--beta", type=float, default=0.7, help="epoch exhaustion fraction")
    run.add_argument("--g", type=int, default=0, help="overestimated-job budget")
    run.add_argument("--epsilon", type=float, default=0.5,
                     help="two-stage reset threshold parameter")
    run.add_argument("--quantum", type=float, default=1.0, help="round-robin quantum")
    run.add_argument("--seed", type=int, default=0, help="seed (reserved for randomized policies)")
    run.add_argument("--trace-out", default=None, help="also write the trace JSON here")
    run.add_argument("--epoch-log", default=None, help="write the epoch log CSV here")

    sweep = sub.add_parser("sweep", help="run a sweep config JSON to CSV")
    sweep.add_argument("--config", required=True, help="SweepConfig JSON path")
    sweep.add_argument("--out", required=True, help="output CSV path")
    sweep.add_argument("--jobs", type=int, default=1,
                       help="parallel trial workers (1 = sequential)")
    sweep.add_argument("--seed", type=int, default=None,
                       help="override the base seed of the config")

    opt = sub.add_parser("opt", help="print the optimum and certificate trace")
    opt.add_argument("--instance", required=True, help="instance JSON path")

    val = sub.add_parser("validate", help="validate a trace against an instance")
    val.add_argument("--instance", required=True, help="instance JSON path")
    val.add_argument("--trace", required=True, help="trace JSON path")
    return parser


def _seed_override(value):
    env = os.environ.get("PRESCHED_SEED")
    if env is not None and env != "":
        return int(env)
    return value


def cmd_gen(args) -> int:
    cfg = bench.GenConfig(
        m=args.m,
        n=args.n,
        special_job_frac=args.special_frac,
        special_machine_count=args.special_machines,
        R=args.R,
        seed=_seed_override(args.seed),
    )
    instance = bench.gen_instance(cfg)
    if cfg.R > 1:
        predictions = bench.gen_predictions(instance, cfg.R, (cfg.seed, 0xD1CE))
        instance = bench.apply_predictions(instance, predictions)
    save_instance(instance, args.out)
    print(json.dumps({"written": args.out, "jobs": instance.n, "machines": instance.m}))
    return 0


def cmd_run(args) -> int:
    instance = load_instance(args.instance)
    policy = bench.make_policy(
        args.algo,
        delta=args.delta,
        beta=args.beta,
        g=args.g,
        epsilon=args.epsilon,
        c=4.0,
        m=instance.m,
        quantum=args.quantum,
    )
    trace = simulate(instance, policy)
    try:
        opt_value = opt_unrelated_matching(instance)
    except (PreschedError, ValueError):
        opt_value = None
    metrics = compute_metrics(instance, trace, opt_value)
    if args.trace_out:
        save_trace(trace, args.trace_out)
    if args.epoch_log:
        rows = epoch_preemptions(trace, trace.annotations.get("epoch_log", []))
        write_epoch_log(rows, args.epoch_log)
    out = metrics.to_dict()
    out["opt"] = opt_value
    print(json.dumps(out))
    return 0


def cmd_sweep(args) -> int:
    with open(args.config) as fh:
        raw = json.load(fh)
    base = bench.GenConfig(**raw.get("base", {}))
    if args.seed is not None:
        base = replace(base, seed=args.seed)
    base = replace(base, seed=_seed_override(base.seed))
    cfg = bench.SweepConfig(
        axis=raw["axis"],
        values=tuple(raw["values"]),
        algorithms=tuple(raw["algorithms"]),
        trials=int(raw.get("trials", 1)),
        base=base,
        delta=float(raw.get("delta", 1.0)),
        beta=float(raw.get("beta", 0.7)),
        epsilon=float(raw.get("epsilon", 0.5)),
        g=int(raw.get("g", 0)),
        c=float(raw.get("c", 4.0)),
        pf_tol=float(raw.get("pf_tol", 1e-4)),
        pf_max_iter=int(raw.get("pf_max_iter", 1500)),
    )
    rows = bench.run_sweep_parallel(cfg, jobs=args.jobs)
    bench.write_csv(rows, args.out)
    errors = sum(1 for r in rows if r.error)
    print(json.dumps({"written": args.out, "rows": len(rows), "errors": errors}))
    return 0


def cmd_opt(args) -> int:
    instance = load_instance(args.instance)
    if instance.m == 1 and all(abs(j.w - 1) < 1e-12 for j in instance.jobs):
        value = opt_single_machine(instance)
        _, trace = opt_unrelated_matching(instance, with_certificate=True)
    else:
        value, trace = opt_unrelated_matching(instance, with_certificate=True)
    print(json.dumps({"opt": value, "certificate": trace_to_dict(trace)}))
    return 0


def cmd_validate(args) -> int:
    instance = load_instance(args.instance)
    trace = load_trace(args.trace)
    report = validate_trace(instance, trace)
    print(
        json.dumps(
            {
                "ok": report.ok,
                "violations": [
                    {"kind": e.kind, "detail": e.detail} for e in report.entries
                ],
            }
        )
    )
    return 0 if report.ok else 2


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    handlers = {
        "gen": cmd_gen,
        "run": cmd_run,
        "sweep": cmd_sweep,
        "opt": cmd_opt,
        "validate": cmd_validate,
    }
    try:
        return handlers[args.command](args)
    except (Infeasible, InfeasibleJob) as exc:
        print(f"infeasible input: {exc}", file=sys.stderr)
        return 2
    except PreschedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
