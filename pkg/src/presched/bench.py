"""Synthetic workload generation and sweep execution.

Instances follow the heterogeneous setup: a fraction of "special" jobs with
large integer sizes runs only on a designated set of machines, the rest are
small and run anywhere.  Predictions divide true sizes by a uniform error
factor in [1, R] and round up, so every prediction is an underestimate.
Sweeps vary one axis (R, beta, delta, special_frac, hybrid_c), run each
algorithm on each trial instance, validate every trace, normalize by the
exact matching optimum, and emit rows in a fixed CSV schema.
"""

from __future__ import annotations

import math
import sys
import time
from dataclasses import dataclass, replace

import numpy as np

from .baselines import blind_policy, doubling_policy, round_robin_policy
from .errors import InvalidConfig, InvalidR, PreschedError
from .metrics import compute_metrics
from .model import Instance, Job
from .optimum import opt_unrelated_matching
from .pmlf import ceil_exp, floor_exp, pmlf_adapted_policy, pmlf_policy, pmlf_identical_policy
from .snap import hybrid_snap_policy, snap_policy, snap_two_stage_policy
from .sim import simulate
from .validate import validate_trace

CSV_HEADER = (
    "algorithm,axis,axis_value,seed,total,opt,ratio,preempt_per_job,"
    "migrate_per_job,queue_moves_per_job,d_bench,runtime_ms"
)

SWEEP_AXES = ("R", "beta", "delta", "special_frac", "hybrid_c")


@dataclass(frozen=True)
class GenConfig:
    m: int = 10
    n: int = 100
    special_job_frac: float = 0.2
    special_machine_count: int = 2
    regular_size_range: tuple = (1, 10)
    special_size_range: tuple = (1, 200)
    R: float = 1.0
    seed: int = 0
    per_job_special_machines: bool = True

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise InvalidConfig("m and n must be >= 1")
        if not 0 <= self.special_job_frac <= 1:
            raise InvalidConfig("special_job_frac must be in [0, 1]")
        if not 0 <= self.special_machine_count <= self.m:
            raise InvalidConfig("special_machine_count must be <= m")
        if self.special_job_frac > 0 and self.special_machine_count == 0:
            raise InvalidConfig("special jobs need at least one special machine")
        for lo, hi in (self.regular_size_range, self.special_size_range):
            if not 1 <= lo <= hi:
                raise InvalidConfig("size ranges must satisfy 1 <= lo <= hi")
        if self.R < 1:
            raise InvalidConfig("R must be >= 1")


@dataclass(frozen=True)
class SweepConfig:
    axis: str
    values: tuple
    algorithms: tuple
    trials: int
    base: GenConfig
    delta: float = 1.0
    beta: float = 0.7
    epsilon: float = 0.5
    g: int = 0
    c: float = 4.0
    pf_tol: float = 1e-4
    pf_max_iter: int = 1500

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise InvalidConfig(f"axis must be one of {SWEEP_AXES}, got {self.axis!r}")
        if not self.values:
            raise InvalidConfig("values must be non-empty")
        if self.trials < 1:
            raise InvalidConfig("trials must be >= 1")
        if not self.algorithms:
            raise InvalidConfig("algorithms must be non-empty")


@dataclass
class ResultRow:
    algorithm: str
    axis: str
    axis_value: float
    seed: int
    total: float = math.nan
    opt: float = math.nan
    ratio: float = math.nan
    preempt_per_job: float = math.nan
    migrate_per_job: float = math.nan
    queue_moves_per_job: float = math.nan
    d_bench: float = math.nan
    runtime_ms: float = math.nan
    error: str | None = None

    def csv(self) -> str:
        def num(v):
            return "nan" if (isinstance(v, float) and math.isnan(v)) else repr(v)

        return ",".join(
            [
                self.algorithm,
                self.axis,
                num(float(self.axis_value)),
                str(self.seed),
                num(self.total),
                num(self.opt),
                num(self.ratio),
                num(self.preempt_per_job),
                num(self.migrate_per_job),
                num(self.queue_moves_per_job),
                num(self.d_bench),
                num(self.runtime_ms),
            ]
        )


def gen_instance(cfg: GenConfig) -> Instance:
    """Deterministic instance for the heterogeneous benchmark setup.

    floor(special_job_frac * n) randomly designated jobs are special:
    integer sizes from the special range, each runnable only on its own
    random draw of special_machine_count machines.  Regular jobs have small
    integer sizes and run anywhere.  With per_job_special_machines=False
    every special job shares the same designated machines (ids 0..count-1).
    """
    rng = np.random.default_rng(cfg.seed)
    n_special = int(cfg.special_job_frac * cfg.n)
    special_ids = set(
        int(v) for v in rng.choice(cfg.n, size=n_special, replace=False)
    ) if n_special else set()
    jobs = []
    rates = np.ones((cfg.m, cfg.n))
    for j in range(cfg.n):
        if j in special_ids:
            lo, hi = cfg.special_size_range
            p = int(rng.integers(lo, hi + 1))
            rates[:, j] = 0.0
            if cfg.per_job_special_machines:
                chosen = rng.choice(cfg.m, size=cfg.special_machine_count, replace=False)
            else:
                chosen = np.arange(cfg.special_machine_count)
            rates[chosen, j] = 1.0
        else:
            lo, hi = cfg.regular_size_range
            p = int(rng.integers(lo, hi + 1))
        jobs.append(Job(j, float(p), float(p)))
    return Instance(jobs, rates)


def gen_predictions(instance: Instance, R: float, seed) -> dict:
    """p_hat_j = ceil(p_j / xi_j) with xi_j uniform on [1, R].

    Integer true sizes guarantee 1 <= p_hat_j <= p_j: predictions are always
    underestimates.
    """
    if R < 1:
        raise InvalidR(f"R must be >= 1, got {R}")
    rng = np.random.default_rng(seed)
    predictions = {}
    for job in instance.jobs:
        xi = rng.uniform(1.0, R)
        predictions[job.id] = float(math.ceil(job.p / xi))
    return predictions


def apply_predictions(instance: Instance, predictions: dict) -> Instance:
    jobs = [Job(j.id, j.p, predictions[j.id], j.r, j.w) for j in instance.jobs]
    return Instance(jobs, instance.rates.copy(), instance.environment)


def make_policy(name: str, *, delta=1.0, beta=0.7, g=0, epsilon=0.5, c=4.0,
                m=1, quantum=1.0, pf_tol=1e-4, pf_max_iter=1500):
    """Policy factory used by sweeps and the CLI; hybrid:C embeds c."""
    if name.startswith("hybrid"):
        if ":" in name:
            c = float(name.split(":", 1)[1])
        return hybrid_snap_policy(c, delta, beta, tol=pf_tol, max_iter=pf_max_iter)
    if name == "snap":
        return snap_policy(delta, beta, tol=pf_tol, max_iter=pf_max_iter)
    if name == "snap-greedy":
        return snap_policy(delta, beta, mode="greedy_step4", tol=pf_tol,
                           max_iter=pf_max_iter)
    if name == "snap-2stage":
        return snap_two_stage_policy(delta, beta, g, epsilon, tol=pf_tol,
                                     max_iter=pf_max_iter)
    if name == "blind":
        return blind_policy()
    if name == "doubling":
        return doubling_policy()
    if name == "pmlf":
        return pmlf_policy(delta)
    if name == "pmlf-identical":
        return pmlf_identical_policy(delta, m)
    if name == "pmlf-adapted":
        return pmlf_adapted_policy(delta, g, max(min(epsilon, 0.999), 1e-6))
    if name == "rr":
        return round_robin_policy(quantum)
    raise InvalidConfig(f"unknown algorithm {name!r}")


def _axis_params(cfg: SweepConfig, value):
    """Per-axis instance config and policy parameters."""
    base = cfg.base
    delta, beta, c, R = cfg.delta, cfg.beta, cfg.c, base.R
    if cfg.axis == "R":
        R = float(value)
    elif cfg.axis == "beta":
        beta = float(value)
    elif cfg.axis == "delta":
        delta = float(value)
    elif cfg.axis == "special_frac":
        base = replace(base, special_job_frac=float(value))
    elif cfg.axis == "hybrid_c":
        c = float(value)
    return base, delta, beta, c, R


def _check_inline_bounds(instance, trace, policy_name, delta, beta):
    """Assert the theory-backed preemption budgets on sweep runs."""
    from .metrics import count_preemptions

    if policy_name.startswith("pmlf"):
        moves = trace.annotations.get("queue_moves", 0)
        budget = sum(
            floor_exp(delta, j.p) - floor_exp(delta, j.p_hat) + 1
            for j in instance.jobs
        )
        if moves > budget:
            raise PreschedError(
                f"queue-move bound violated: {moves} > {budget}"
            )
    if policy_name == "snap":
        preempt, _ = count_preemptions(instance, trace)
        budget = (1.0 / beta) * sum(
            ceil_exp(delta, j.p / j.p_hat) + 1 for j in instance.jobs
        )
        if preempt > budget + 1e-9:
            raise PreschedError(
                f"preemption budget violated: {preempt} > {budget}"
            )


def run_trial(instance, predictions, algorithm, *, delta, beta, g, epsilon, c,
              pf_tol, pf_max_iter, opt_value, check_bounds=True):
    """One (instance, predictions, algorithm) run -> metric fields."""
    inst = apply_predictions(instance, predictions)
    policy = make_policy(
        algorithm, delta=delta, beta=beta, g=g, epsilon=epsilon, c=c,
        m=inst.m, pf_tol=pf_tol, pf_max_iter=pf_max_iter,
    )
    t0 = time.perf_counter()
    trace = simulate(inst, policy)
    elapsed_ms = (time.perf_counter() - t0) * 1e3
    report = validate_trace(inst, trace)
    if not report.ok:
        raise PreschedError(f"infeasible trace: {report.summary()}")
    if check_bounds:
        _check_inline_bounds(inst, trace, algorithm, delta, beta)
    metrics = compute_metrics(inst, trace, opt_value)
    return metrics, elapsed_ms, trace


def _run_unit(cfg: SweepConfig, value, algorithm, trial, opt_cache=None) -> ResultRow:
    """One sweep cell; errors become an error row, never an exception."""
    base, delta, beta, c, R = _axis_params(cfg, value)
    seed = base.seed + trial
    row = ResultRow(algorithm, cfg.axis, float(value), seed)
    try:
        instance = gen_instance(replace(base, seed=seed))
        predictions = gen_predictions(instance, R, (seed, 0xD1CE))
        cache_key = (base.special_job_frac, seed)
        if opt_cache is not None and cache_key in opt_cache:
            opt_value = opt_cache[cache_key]
        else:
            opt_value = opt_unrelated_matching(instance)
            if opt_cache is not None:
                opt_cache[cache_key] = opt_value
        metrics, elapsed_ms, _ = run_trial(
            instance,
            predictions,
            algorithm,
            delta=delta,
            beta=beta,
            g=cfg.g,
            epsilon=cfg.epsilon,
            c=c,
            pf_tol=cfg.pf_tol,
            pf_max_iter=cfg.pf_max_iter,
            opt_value=opt_value,
        )
        n = instance.n
        row.total = metrics.total_completion
        row.opt = opt_value
        row.ratio = metrics.ratio
        row.preempt_per_job = metrics.preemptions / n
        row.migrate_per_job = metrics.migrations / n
        row.queue_moves_per_job = metrics.queue_moves / n
        row.d_bench = metrics.D_benchmark
        row.runtime_ms = elapsed_ms
    except Exception as exc:  # error rows, never abort the sweep
        row.error = f"{type(exc).__name__}: {exc}"
        print(f"sweep error [{row.csv()}]: {row.error}", file=sys.stderr)
    return row


def run_sweep(cfg: SweepConfig, progress=False) -> list:
    """Execute the sweep and return ResultRows in deterministic order.

    A failed run yields an error row (metrics NaN) and never aborts the
    sweep.  The optimum is cached per generated instance; rows are ordered
    by (axis value, algorithm, trial).
    """
    rows = []
    opt_cache = {}
    for value in cfg.values:
        for algorithm in cfg.algorithms:
            for trial in range(cfg.trials):
                rows.append(_run_unit(cfg, value, algorithm, trial, opt_cache))
            if progress:
                print(f"sweep {cfg.axis}={value} {algorithm}: done", file=sys.stderr)
    return rows


def _unit_worker(payload):
    cfg, value, algorithm, trial = payload
    return _run_unit(cfg, value, algorithm, trial)


def run_sweep_parallel(cfg: SweepConfig, jobs: int = 1, progress=False) -> list:
    """run_sweep with trials fanned out over worker processes.

    Rows come back in the same deterministic (value, algorithm, trial)
    order regardless of completion order.
    """
    if jobs <= 1:
        return run_sweep(cfg, progress)
    from concurrent.futures import ProcessPoolExecutor

    units = [
        (cfg, value, algorithm, trial)
        for value in cfg.values
        for algorithm in cfg.algorithms
        for trial in range(cfg.trials)
    ]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_unit_worker, units, chunksize=max(1, len(units) // (4 * jobs))))


def write_csv(rows, path):
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for row in rows:
            fh.write(row.csv() + "\n")
