"""Exact and reference optima for competitive-ratio normalization.

The unrelated-machines optimum (all jobs at t=0, unit weights) is the
classical min-cost matching of jobs to (machine, position-from-last) slots
with cost k * p_j / lam_ij.  Matching infrastructure is delegated to
scipy.optimize.linear_sum_assignment; a brute-force enumerator over
assignments and per-machine orders serves as the independent test oracle.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import Infeasible, InvalidParameter, TooLarge, WrongEnvironment
from .model import Instance, Segment, Trace

_BIG = 1e18


@dataclass
class AssignmentProblem:
    cost: np.ndarray
    solution: dict
    value: float


def min_cost_assignment(cost, lexicographic: bool = True) -> AssignmentProblem:
    """Exact min-cost perfect matching on rows (rows <= cols).

    Infinite entries mark forbidden pairs.  With lexicographic=True the
    returned solution map (row -> col) is the lexicographically smallest
    among all optimal ones (row 0's column minimized first, then row 1's).
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.shape[0] > cost.shape[1]:
        raise InvalidParameter("cost must be (rows, cols) with rows <= cols")
    work = np.where(np.isinf(cost), _BIG, cost)
    try:
        rows, cols = linear_sum_assignment(work)
    except ValueError as exc:  # pragma: no cover - shape errors
        raise Infeasible(str(exc)) from exc
    value = float(work[rows, cols].sum())
    if value >= 0.5 * _BIG:
        raise Infeasible("no perfect matching avoids forbidden pairs")
    solution = {int(r): int(c) for r, c in zip(rows, cols)}
    if lexicographic:
        tol = 1e-9 * max(1.0, abs(value))

        def fix(matrix, r, c):
            matrix[r, :] = _BIG
            matrix[:, c] = _BIG
            matrix[r, c] = 0.0

        solution = {}
        committed_cost = 0.0
        base = work.copy()
        for r in range(cost.shape[0]):
            for c in range(cost.shape[1]):
                if c in solution.values() or work[r, c] >= _BIG:
                    continue
                trial = base.copy()
                fix(trial, r, c)
                rr, cc = linear_sum_assignment(trial)
                rest = float(trial[rr, cc].sum())
                if rest >= 0.5 * _BIG:
                    continue
                if committed_cost + work[r, c] + rest <= value + tol:
                    solution[r] = c
                    committed_cost += work[r, c]
                    fix(base, r, c)
                    break
            else:  # pragma: no cover - guarded by feasibility above
                raise Infeasible("lexicographic refinement failed")
        value = float(sum(cost[r, c] for r, c in solution.items()))
    return AssignmentProblem(cost, solution, value)


def _require_unit_weights(instance):
    if any(abs(j.w - 1.0) > 1e-12 for j in instance.jobs):
        raise WrongEnvironment("matching optimum supports unit weights only")


def opt_single_machine(instance: Instance) -> float:
    """Weighted Smith-rule optimum on one machine, all releases at 0."""
    if instance.m != 1:
        raise WrongEnvironment(f"single-machine optimum needs m=1, got m={instance.m}")
    if any(j.r > 0 for j in instance.jobs):
        raise WrongEnvironment("single-machine optimum assumes all releases at 0")
    times = sorted(
        ((j.p / instance.rate(0, j.id)) / j.w, j.p / instance.rate(0, j.id), j.w)
        for j in instance.jobs
    )
    total = 0.0
    clock = 0.0
    for _, t, w in times:
        clock += t
        total += w * clock
    return total


def opt_unrelated_matching(instance: Instance, with_certificate: bool = False):
    """Exact non-preemptive optimum via slot matching (r=0, unit weights).

    Slot (i, k) carries cost k * p_j / lam_ij, k counting positions from the
    last job on machine i.  Returns the optimal value, or (value, trace)
    when with_certificate is set; the certificate passes validate_trace and
    realizes the value exactly.
    """
    if any(j.r > 0 for j in instance.jobs):
        raise WrongEnvironment("matching optimum assumes all releases at 0")
    _require_unit_weights(instance)
    n, m = instance.n, instance.m
    cost = np.full((n, m * n), np.inf)
    for row, job in enumerate(instance.jobs):
        for i in range(m):
            lam = instance.rate(i, job.id)
            if lam <= 0:
                continue
            for k in range(1, n + 1):
                cost[row, i * n + (k - 1)] = k * job.p / lam
    problem = min_cost_assignment(cost, lexicographic=False)
    if not with_certificate:
        return problem.value
    per_machine = {}
    for row, col in problem.solution.items():
        job = instance.jobs[row]
        machine, k = divmod(col, n)
        per_machine.setdefault(machine, []).append((k + 1, job))
    segments = []
    completion = {}
    for machine, slots in per_machine.items():
        slots.sort(key=lambda s: -s[0])  # largest position-from-last runs first
        clock = 0.0
        for _, job in slots:
            lam = instance.rate(machine, job.id)
            end = clock + job.p / lam
            segments.append(Segment(job.id, machine, clock, end, lam))
            completion[job.id] = end
            clock = end
    return problem.value, Trace(segments, completion)


def brute_force_opt(instance: Instance, preemption_grid: bool = False) -> float:
    """Exhaustive optimum for small instances (the test oracle).

    With all releases at 0: minimum over every machine assignment and every
    per-machine job order (n <= 6, m <= 3).  With release times: exhaustive
    search over event-grid preemptive schedules, single machine and n <= 3.
    """
    n, m = instance.n, instance.m
    _require_unit_weights(instance)
    has_releases = any(j.r > 0 for j in instance.jobs)
    if has_releases or preemption_grid:
        if m != 1 or n > 3:
            raise TooLarge("release-time brute force supports m=1, n<=3 only")
        return _brute_force_preemptive_single(instance)
    if n > 6 or m > 3:
        raise TooLarge(f"brute force capped at n<=6, m<=3, got n={n}, m={m}")
    jobs = list(instance.jobs)
    best = math.inf
    for perm in itertools.permutations(range(n)):
        for split in itertools.combinations_with_replacement(range(n + 1), m - 1):
            bounds = (0,) + split + (n,)
            total = 0.0
            for i in range(m):
                clock = 0.0
                feasible = True
                for idx in perm[bounds[i] : bounds[i + 1]]:
                    job = jobs[idx]
                    lam = instance.rate(i, job.id)
                    if lam <= 0:
                        feasible = False
                        break
                    clock += job.p / lam
                    total += clock
                if not feasible:
                    total = math.inf
                    break
            best = min(best, total)
    if not math.isfinite(best):
        raise Infeasible("no feasible assignment")
    return best


def _brute_force_preemptive_single(instance: Instance) -> float:
    """DFS over which alive job runs between consecutive event times."""
    jobs = list(instance.jobs)
    releases = sorted({j.r for j in jobs})

    def dfs(t, remaining, done_count, acc, best):
        if acc >= best:
            return best
        if done_count == len(jobs):
            return min(best, acc)
        alive = [j for j in jobs if j.r <= t + 1e-12 and remaining[j.id] > 1e-12]
        future = [r for r in releases if r > t + 1e-12]
        if not alive:
            return dfs(future[0], remaining, done_count, acc, best)
        horizon = future[0] if future else math.inf
        for job in alive:
            rate = instance.rate(0, job.id)
            finish = t + remaining[job.id] / rate
            nxt = min(finish, horizon)
            rem2 = dict(remaining)
            rem2[job.id] -= (nxt - t) * rate
            if rem2[job.id] <= 1e-12:
                rem2[job.id] = 0.0
                best = dfs(nxt, rem2, done_count + 1, acc + nxt, best)
            else:
                best = dfs(nxt, rem2, done_count, acc, best)
        return best

    return dfs(0.0, {j.id: j.p for j in jobs}, 0, 0.0, math.inf)


def srpt_lower_bound(instance: Instance) -> float:
    """Total completion time of preemptive SRPT on one machine.

    Optimal for single-machine total completion time with release times, so
    it lower-bounds every preemptive or non-preemptive schedule.
    """
    if instance.m != 1:
        raise WrongEnvironment(f"SRPT bound needs m=1, got m={instance.m}")
    remaining = {j.id: j.p for j in instance.jobs}
    release = {j.id: j.r for j in instance.jobs}
    rate = {j.id: instance.rate(0, j.id) for j in instance.jobs}
    t = 0.0
    total = 0.0
    unfinished = set(remaining)
    while unfinished:
        alive = [j for j in unfinished if release[j] <= t + 1e-12]
        if not alive:
            t = min(release[j] for j in unfinished)
            continue
        job = min(alive, key=lambda j: (remaining[j] / rate[j], j))
        finish = t + remaining[job] / rate[job]
        horizon = min(
            (release[j] for j in unfinished if release[j] > t + 1e-12),
            default=math.inf,
        )
        if finish <= horizon + 1e-12:
            t = finish
            total += t
            remaining[job] = 0.0
            unfinished.remove(job)
        else:
            remaining[job] -= (horizon - t) * rate[job]
            t = horizon
    return total
