"""Trace feasibility checks.

Violations are report entries, not exceptions; an empty report means the
trace is a feasible schedule for the instance.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import Instance, Trace

# Completion bookkeeping tolerates more slack than the 1e-9 event tolerance
# because segment work accumulates over many floating-point increments.
_REL_WORK_TOL = 1e-9
_TIME_TOL = 1e-6


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str


@dataclass
class ValidationReport:
    entries: list

    @property
    def ok(self) -> bool:
        return not self.entries

    def kinds(self):
        return {e.kind for e in self.entries}

    def summary(self) -> str:
        if self.ok:
            return "feasible"
        return "; ".join(f"{e.kind}: {e.detail}" for e in self.entries[:10])


def validate_trace(instance: Instance, trace: Trace) -> ValidationReport:
    """List every violated schedule invariant of the trace."""
    entries = []
    known = {j.id for j in instance.jobs}

    for seg in trace.segments:
        if seg.job not in known:
            entries.append(Violation("UnknownJob", f"segment references job {seg.job}"))
        elif not (0 <= seg.machine < instance.m):
            entries.append(Violation("UnknownMachine", f"segment references machine {seg.machine}"))
        else:
            lam = instance.rate(seg.machine, seg.job)
            if abs(seg.rate - lam) > 1e-9 * max(1.0, lam):
                entries.append(
                    Violation(
                        "RateMismatch",
                        f"job {seg.job} on machine {seg.machine}: rate {seg.rate} != lambda {lam}",
                    )
                )
            if seg.t0 < instance.job(seg.job).r - _TIME_TOL:
                entries.append(
                    Violation("PreReleaseWork", f"job {seg.job} runs at {seg.t0} before release")
                )

    by_machine = {}
    by_job = {}
    for seg in trace.segments:
        by_machine.setdefault(seg.machine, []).append(seg)
        by_job.setdefault(seg.job, []).append(seg)

    for machine, segs in by_machine.items():
        segs.sort(key=lambda s: s.t0)
        for a, b in zip(segs, segs[1:]):
            if b.t0 < a.t1 - _TIME_TOL:
                entries.append(
                    Violation(
                        "MachineOverlap",
                        f"machine {machine}: [{a.t0},{a.t1}] overlaps [{b.t0},{b.t1}]",
                    )
                )

    for job in instance.jobs:
        segs = sorted(by_job.get(job.id, []), key=lambda s: s.t0)
        for a, b in zip(segs, segs[1:]):
            if b.t0 < a.t1 - _TIME_TOL:
                entries.append(
                    Violation(
                        "JobOverlap",
                        f"job {job.id}: [{a.t0},{a.t1}] overlaps [{b.t0},{b.t1}]",
                    )
                )
        work = sum(s.work for s in segs if s.job == job.id)
        tol = max(_REL_WORK_TOL * job.p, 1e-9)
        if work > job.p + tol:
            entries.append(Violation("OverProcessing", f"job {job.id}: work {work} > p {job.p}"))
        elif work < job.p - tol:
            entries.append(Violation("UnderProcessing", f"job {job.id}: work {work} < p {job.p}"))
        c = trace.completion.get(job.id)
        if c is None:
            entries.append(Violation("MissingCompletion", f"job {job.id} has no completion time"))
        elif segs and abs(segs[-1].t1 - c) > _TIME_TOL:
            entries.append(
                Violation(
                    "CompletionMismatch",
                    f"job {job.id}: completion {c} != last segment end {segs[-1].t1}",
                )
            )
        if segs and c is not None:
            for s in segs:
                if s.t0 > c + _TIME_TOL:
                    entries.append(
                        Violation("WorkAfterCompletion", f"job {job.id} runs at {s.t0} after {c}")
                    )

    return ValidationReport(entries)
