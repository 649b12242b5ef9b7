"""Objective and preemption accounting over validated traces.

A preemption is a context switch: a machine stops a job that is not yet
finished.  Contiguous same-machine segments are merged before counting, so
artificially split logs and coalesced logs score identically.  A migration
is a preemption whose next segment runs on a different machine.  Queue moves
(reorderings inside multilevel-feedback policies that may or may not switch
context) are taken from policy instrumentation and reported separately.
"""

from __future__ import annotations

import math

from .errors import InvalidTrace
from .model import Instance, Metrics, Trace
from .validate import validate_trace


def coalesce(segments):
    """Merge contiguous same-machine, same-job segments (per job)."""
    merged = []
    for seg in sorted(segments, key=lambda s: (s.job, s.t0)):
        if (
            merged
            and merged[-1].job == seg.job
            and merged[-1].machine == seg.machine
            and abs(merged[-1].t1 - seg.t0) <= 1e-9
        ):
            merged[-1] = type(seg)(seg.job, seg.machine, merged[-1].t0, seg.t1, seg.rate)
        else:
            merged.append(seg)
    return merged


def d_benchmark(instance: Instance) -> float:
    """Ideal preemption budget sum_j w_j (log2(p_j / p_hat_j) + 1)."""
    return sum(j.w * (math.log2(j.p / j.p_hat) + 1.0) for j in instance.jobs)


def count_preemptions(instance: Instance, trace: Trace):
    """(preemptions, migrations) from coalesced per-job segment boundaries."""
    preemptions = 0
    migrations = 0
    merged = coalesce(trace.segments)
    by_job = {}
    for seg in merged:
        by_job.setdefault(seg.job, []).append(seg)
    for segs in by_job.values():
        segs.sort(key=lambda s: s.t0)
        for cur, nxt in zip(segs, segs[1:]):
            preemptions += 1
            if nxt.machine != cur.machine:
                migrations += 1
    return preemptions, migrations


def compute_metrics(instance: Instance, trace: Trace, opt_value: float | None = None) -> Metrics:
    """Weighted total completion time plus preemption/migration counts.

    Raises InvalidTrace when the trace fails feasibility validation.
    """
    report = validate_trace(instance, trace)
    if not report.ok:
        raise InvalidTrace(report)
    per_job = dict(trace.completion)
    total = sum(instance.job(j).w * c for j, c in per_job.items())
    preemptions, migrations = count_preemptions(instance, trace)
    queue_moves = int(trace.annotations.get("queue_moves", 0))
    ratio = None if opt_value is None else total / opt_value
    return Metrics(
        total_completion=total,
        per_job_completion=per_job,
        preemptions=preemptions,
        migrations=migrations,
        queue_moves=queue_moves,
        D_benchmark=d_benchmark(instance),
        ratio=ratio,
    )
