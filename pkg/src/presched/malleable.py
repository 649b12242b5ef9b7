"""Non-preemptive rounding of fractional malleable allocations.

Given per-job fractional machine counts x_j (sum at most m), concave
piecewise-linear speed-up functions with integer breakpoints, and a plan
length L, builds an integral schedule of makespan at most 2L: jobs with
x_j >= 1 get floor(x_j) dedicated machines for the whole horizon, the rest
are list-scheduled one machine each on the leftover machines.  No job is
ever preempted.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

from .errors import CapacityExceeded, InvalidSpeedup, NegativeArgument

_TOL = 1e-9


@dataclass(frozen=True)
class SpeedupFunction:
    """Concave, non-decreasing, piecewise-linear speed-up with f(0) = 0.

    values[k] is f(k) at the integer breakpoints k = 0..K; evaluation is
    linear between breakpoints and extends the final slope beyond the last.
    """

    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if len(vals) < 2:
            raise InvalidSpeedup("need f(0) and f(1) at least")
        if abs(vals[0]) > _TOL:
            raise InvalidSpeedup(f"f(0) must be 0, got {vals[0]}")
        deltas = [b - a for a, b in zip(vals, vals[1:])]
        if any(d < -_TOL for d in deltas):
            raise InvalidSpeedup("speed-up must be non-decreasing")
        for a, b in zip(deltas, deltas[1:]):
            if b > a + _TOL:
                raise InvalidSpeedup("speed-up must be concave")


def speedup_eval(f: SpeedupFunction, s: float) -> float:
    """Linear interpolation of f between its integer breakpoints."""
    if s < 0:
        raise NegativeArgument(f"allocation must be >= 0, got {s}")
    vals = f.values
    k = int(s)
    if k >= len(vals) - 1:
        last_slope = vals[-1] - vals[-2]
        return vals[-1] + (s - (len(vals) - 1)) * last_slope
    frac = s - k
    return vals[k] + frac * (vals[k + 1] - vals[k])


@dataclass
class MalleablePlan:
    """Integral schedule: dedicated machine blocks plus list-scheduled jobs."""

    length: float
    makespan: float
    dedicated: dict = field(default_factory=dict)  # job -> (machines tuple, duration)
    listed: dict = field(default_factory=dict)  # job -> (machine, start, end)

    @property
    def preemptions(self) -> int:
        return 0  # every job runs as one contiguous block by construction


def round_malleable_identical(x, fs, L: float, m: int) -> MalleablePlan:
    """Round a fractional allocation (x_j, f_j, L) into a 2L schedule.

    x: per-job fractional machine counts with sum <= m; fs: per-job
    SpeedupFunction; each job must receive exactly f_j(x_j) * L units of
    work.  Raises CapacityExceeded when sum(x) > m.
    """
    if L <= 0:
        raise CapacityExceeded(f"plan length must be > 0, got {L}")
    if m < 1:
        raise CapacityExceeded(f"need at least one machine, got {m}")
    x = [float(v) for v in x]
    if len(x) != len(fs):
        raise CapacityExceeded("x and speed-up lists must align")
    if any(v < 0 for v in x):
        raise CapacityExceeded("allocations must be non-negative")
    if sum(x) > m + _TOL:
        raise CapacityExceeded(f"sum(x) = {sum(x)} exceeds m = {m}")

    plan = MalleablePlan(length=L, makespan=0.0)
    big = [(j, x[j]) for j in range(len(x)) if x[j] >= 1.0]
    small = [(j, x[j]) for j in range(len(x)) if 0 < x[j] < 1.0]

    next_machine = 0
    for j, xj in big:
        count = int(xj)
        work = speedup_eval(fs[j], xj) * L
        rate = speedup_eval(fs[j], count)
        machines = tuple(range(next_machine, next_machine + count))
        next_machine += count
        duration = work / rate if work > _TOL else 0.0
        plan.dedicated[j] = (machines, duration)
        plan.makespan = max(plan.makespan, duration)

    free = list(range(next_machine, m))
    if small and not free:
        # sum(x) <= m guarantees ceil(sum of small x) machines remain
        raise CapacityExceeded("no machines left for fractional jobs")

    # LPT list scheduling: longest job first onto the earliest-free machine
    jobs = []
    for j, xj in small:
        work = speedup_eval(fs[j], xj) * L
        rate = speedup_eval(fs[j], 1.0)
        duration = (work / rate) if work > _TOL else 0.0
        jobs.append((duration, j))
    jobs.sort(key=lambda t: (-t[0], t[1]))
    heap = [(0.0, i) for i in free]
    heapq.heapify(heap)
    for duration, j in jobs:
        start, machine = heapq.heappop(heap)
        end = start + duration
        plan.listed[j] = (machine, start, end)
        plan.makespan = max(plan.makespan, end)
        heapq.heappush(heap, (end, machine))
    return plan
