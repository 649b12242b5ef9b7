"""Checkpoint-driven epoch scheduling for unrelated machines.

Each epoch solves the proportional-fairness program over the alive jobs,
computes every job's work gap to its next checkpoint (the next power of
1+delta at or above its prediction and strictly above its processed work),
picks the epoch length so that a beta fraction of jobs would reach their
checkpoints at the PF rates, and dispatches each job to the machine where
PF gives it the most work.

Two per-epoch execution modes exist.  The default "experimental" mode runs
a multilevel-feedback policy on each machine over its assigned jobs and
ends the epoch once a beta fraction of distinct jobs have exhausted (or all
jobs completed).  The "greedy_step4" mode processes each assigned job
non-preemptively for exactly its target work (largest target first) and
ends the epoch when every target is met; the achieved epoch length is
logged against four times the planned length, not asserted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidDelta, InvalidParameter, WrongEnvironment
from .model import EPS
from .pfrates import DEFAULT_MAX_ITER, DEFAULT_TOL, PFRates, solve_pf
from .pmlf import ceil_exp, floor_exp
from .baselines import MachineQueue, dispatch_min_increase
from .sim import (
    COMPLETION,
    RELEASE,
    SIM_START,
    THRESHOLD,
    TIMER,
    Decision,
    Policy,
)


def next_checkpoint_exp(p_hat: float, q: float, delta: float) -> int:
    """Exponent of the next checkpoint: smallest rho >= ceil(log p_hat)
    with (1+delta)^rho strictly above the processed amount q."""
    rho = ceil_exp(delta, p_hat)
    while (1.0 + delta) ** rho <= q + EPS:
        rho += 1
    return rho


def next_checkpoint_gap(p_hat: float, q: float, delta: float) -> float:
    """Remaining work u until the next checkpoint."""
    if delta <= 0:
        raise InvalidDelta(f"delta must be > 0, got {delta}")
    if p_hat < 1:
        raise InvalidParameter(f"p_hat must be >= 1, got {p_hat}")
    if q < 0:
        raise InvalidParameter(f"q must be >= 0, got {q}")
    return (1.0 + delta) ** next_checkpoint_exp(p_hat, q, delta) - q


def _quota(beta: float, n: int) -> int:
    # ceil with protection against float fuzz on exact multiples
    return max(1, int(math.ceil(beta * n - 1e-9)))


@dataclass
class EpochPlan:
    """One epoch's plan: PF rates, checkpoint gaps, duration, and dispatch."""

    k: int
    e_k: float
    jobs: tuple
    n_k: int
    y: dict
    u: dict
    l_k: float
    v: dict
    assignment: dict
    pf: PFRates


def plan_epoch(
    job_ids,
    processed,
    predictions,
    rates,
    delta: float,
    beta: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    x0=None,
    lane=None,
    k: int = 1,
    start: float = 0.0,
    prev_assignment=None,
    stickiness: float = 0.2,
) -> EpochPlan:
    """Plan one epoch over the given alive jobs.

    rates is the (m, len(job_ids)) matrix aligned with job_ids; processed
    and predictions map job id to q_j and p_hat_j.  Ties in the duration
    quantile and in the dispatch resolve by ascending id and lowest machine
    id.  A job keeps its previous machine (prev_assignment) whenever that
    machine's greedy completion key is within a (1 + stickiness) factor of
    the best, which suppresses context switches at epoch boundaries.
    """
    if not 0 < beta <= 1:
        raise InvalidParameter(f"beta must be in (0, 1], got {beta}")
    job_ids = sorted(job_ids)
    if not job_ids:
        raise InvalidParameter("cannot plan an epoch with no jobs")
    n_k = len(job_ids)
    pf = solve_pf(rates, tol=tol, max_iter=max_iter, x0=x0, jobs=job_ids, lane=lane)
    u = {j: next_checkpoint_gap(predictions[j], processed[j], delta) for j in job_ids}
    y = {j: pf.rate_of(j) for j in job_ids}
    order = sorted(job_ids, key=lambda j: (u[j] / y[j], j))
    pivot = order[_quota(beta, n_k) - 1]
    l_k = u[pivot] / y[pivot]
    v = {j: min(u[j], l_k * y[j]) for j in job_ids}
    # Dispatch: greedy list scheduling on the epoch work targets.  Largest
    # target first, each job to the machine where it finishes earliest
    # given the loads committed so far; ties prefer the machine where the
    # fractional solution gives the job the most work, then the lowest id.
    # (Plain argmax over lambda*x collapses onto one machine whenever the
    # fractional optimum is symmetric.)
    lam = np.asarray(rates, dtype=np.float64)
    assignment = {}
    loads = np.zeros(lam.shape[0])
    prev_assignment = prev_assignment or {}
    for j in sorted(job_ids, key=lambda j: (-v[j], j)):
        idx = job_ids.index(j)
        col = pf.jobs.index(j)
        best = None
        for i in range(lam.shape[0]):
            if lam[i, idx] <= 0:
                continue
            key = (loads[i] + v[j] / lam[i, idx], -lam[i, idx] * pf.x[i, col], i)
            if best is None or key < best[0]:
                best = (key, i)
        machine = best[1]
        prev = prev_assignment.get(j)
        if prev is not None and prev != machine and lam[prev, idx] > 0:
            if loads[prev] + v[j] / lam[prev, idx] <= best[0][0] * (1.0 + stickiness):
                machine = prev
        assignment[j] = machine
        loads[machine] += v[j] / lam[machine, idx]
    return EpochPlan(k, start, tuple(job_ids), n_k, y, u, l_k, v, assignment, pf)


EXPERIMENTAL = "experimental"
GREEDY_STEP4 = "greedy_step4"


class SnapPolicy(Policy):
    """Epoch-planned scheduling with checkpoint-bounded preemption."""

    def __init__(
        self,
        delta: float,
        beta: float,
        mode: str = EXPERIMENTAL,
        tol: float = DEFAULT_TOL,
        max_iter: int = DEFAULT_MAX_ITER,
        lane=None,
    ):
        if delta <= 0:
            raise InvalidDelta(f"delta must be > 0, got {delta}")
        if not 0 < beta <= 1:
            raise InvalidParameter(f"beta must be in (0, 1], got {beta}")
        if mode not in (EXPERIMENTAL, GREEDY_STEP4):
            raise InvalidParameter(f"unknown mode {mode!r}")
        self.delta = delta
        self.beta = beta
        self.mode = mode
        self.tol = tol
        self.max_iter = max_iter
        self.lane = lane

    # -- event plumbing ------------------------------------------------

    def on_event(self, view, event):
        if event.kind == SIM_START:
            self._init(view)
        elif event.kind == RELEASE:
            if view.t > EPS:
                raise WrongEnvironment("SNAP requires all jobs released at t=0")
            self.p_hat[event.job] = view.p_hat(event.job)
            self.pmlf_k[event.job] = floor_exp(self.delta, view.p_hat(event.job))
        elif event.kind == COMPLETION:
            self._on_completion(view, event.job)
        elif event.kind == TIMER and event.tag == "plan":
            self._replan(view)
        elif event.kind == THRESHOLD:
            self._on_threshold(view, event.job, event.amount)
        self.last_time = view.t
        return self._decide(view)

    def _init(self, view):
        self.p_hat = {}
        self.pmlf_k = {}
        self.seq = {}
        self.queue_moves = 0
        self.exhaust_events = 0
        self.plan = None
        self.k = 0
        self.rho = {}
        self.cp_value = {}
        self.machine_jobs = {}
        self.exhausted_jobs = set()
        self.epoch_events = 0
        self.quota = 0
        self.target_abs = {}
        self.met = set()
        self.pending_count = 0
        self.epoch_log = []
        self.last_time = 0.0
        self._seq_counter = 0
        self._last_pf = None
        self._last_assign = {}

    # -- epoch planning ------------------------------------------------

    def _prediction_hook(self, view, alive):
        """Two-stage variant resets predictions here."""

    def _replan(self, view):
        self._finalize_epoch_row(view.t)
        prev_assignment = dict(self.plan.assignment) if self.plan else None
        alive = view.alive()
        if not alive:
            self.plan = None
            return
        self._prediction_hook(view, alive)
        self.k += 1
        lam = view.rates_matrix(alive)
        x0 = self._warm_start(alive, lam.shape[0])
        self.plan = plan_epoch(
            alive,
            {j: view.processed(j) for j in alive},
            {j: self.p_hat[j] for j in alive},
            lam,
            self.delta,
            self.beta,
            tol=self.tol,
            max_iter=self.max_iter,
            x0=x0,
            lane=self.lane,
            k=self.k,
            start=view.t,
            prev_assignment=prev_assignment,
        )
        self._last_pf = self.plan.pf
        self.quota = _quota(self.beta, self.plan.n_k)
        self.exhausted_jobs = set()
        self.epoch_events = 0
        self.machine_jobs = {}
        # a job interrupted mid-run resumes first on its machine, so a
        # replan that keeps the assignment costs no context switch
        resumed = {
            j for i, j in self._last_assign.items() if self.plan.assignment.get(j) == i
        }
        for j in sorted(self.plan.jobs, key=lambda j: (j not in resumed, j)):
            self.machine_jobs.setdefault(self.plan.assignment[j], []).append(j)
            self.seq[j] = self._next_seq()
            self.rho[j] = next_checkpoint_exp(self.p_hat[j], view.processed(j), self.delta)
            self.cp_value[j] = (1.0 + self.delta) ** self.rho[j]
        self.target_abs = {
            j: view.processed(j) + self.plan.v[j] for j in self.plan.jobs
        }
        self.met = set()
        self.pending_count = self.plan.n_k

    def _warm_start(self, alive, m):
        if self._last_pf is None:
            return None
        x0 = np.zeros((m, len(alive)))
        prev = {j: i for i, j in enumerate(self._last_pf.jobs)}
        for idx, j in enumerate(sorted(alive)):
            if j in prev:
                x0[:, idx] = self._last_pf.x[:, prev[j]]
        return x0

    def _next_seq(self):
        self._seq_counter += 1
        return self._seq_counter

    def _finalize_epoch_row(self, now):
        if self.plan is not None:
            self.epoch_log.append(
                {
                    "k": self.plan.k,
                    "e_k": self.plan.e_k,
                    "n_k": self.plan.n_k,
                    "l_k": self.plan.l_k,
                    "achieved_length": now - self.plan.e_k,
                    "exhaustions": self.epoch_events,
                    "distinct_exhausted": len(self.exhausted_jobs),
                }
            )

    # -- in-epoch bookkeeping -------------------------------------------

    def _advance_checkpoint(self, job, q):
        while (1.0 + self.delta) ** self.rho[job] <= q + EPS:
            self.rho[job] += 1
        self.cp_value[job] = (1.0 + self.delta) ** self.rho[job]

    def _record_exhaustion(self, view, job):
        self.exhaust_events += 1
        self.epoch_events += 1
        self.exhausted_jobs.add(job)

    def _on_threshold(self, view, job, amount):
        replan = False
        if amount >= self.cp_value[job] - EPS:
            self._record_exhaustion(view, job)
            self._advance_checkpoint(job, view.processed(job))
            if self.mode == EXPERIMENTAL and self.epoch_events >= self.quota:
                replan = True
        if amount >= (1.0 + self.delta) ** (self.pmlf_k[job] + 1) - EPS:
            self.pmlf_k[job] += 1
            self.seq[job] = self._next_seq()
            self.queue_moves += 1
        if self.mode == GREEDY_STEP4 and job in self.target_abs:
            if amount >= self.target_abs[job] - EPS and job not in self.met:
                self.met.add(job)
                self.pending_count -= 1
                if self.pending_count == 0:
                    replan = True
        if replan:
            self._replan(view)

    def _on_completion(self, view, job):
        replan = False
        if job in self.cp_value and view.processed(job) >= self.cp_value[job] - EPS:
            self._record_exhaustion(view, job)
            del self.cp_value[job]  # completed: never recount
        if self.plan is not None:
            if self.mode == EXPERIMENTAL and self.epoch_events >= self.quota:
                replan = True
            if self.mode == GREEDY_STEP4 and job in self.target_abs and job not in self.met:
                self.met.add(job)
                self.pending_count -= 1
                if self.pending_count == 0:
                    replan = True
        for jobs in self.machine_jobs.values():
            if job in jobs:
                jobs.remove(job)
        if replan:
            self._replan(view)

    # -- decisions -------------------------------------------------------

    def _decide(self, view):
        if self.plan is None:
            if view.alive():
                return Decision(timers={"plan": view.t})
            return Decision()
        assign = {}
        thresholds = {}
        for machine, jobs in self.machine_jobs.items():
            front = self._front_job(machine, jobs)
            if front is None:
                continue
            assign[machine] = front
            thresholds[front] = self._threshold_for(view, front)
        self._last_assign = dict(assign)
        return Decision(assign=assign, thresholds=thresholds)

    def _front_job(self, machine, jobs):
        if self.mode == EXPERIMENTAL:
            if not jobs:
                return None
            return min(jobs, key=lambda j: (self.pmlf_k[j], self.seq[j]))
        for j in sorted(jobs, key=lambda j: (-self.plan.v[j], j)):
            if j not in self.met:
                return j
        return None

    def _threshold_for(self, view, job):
        if self.mode == EXPERIMENTAL:
            boundary = (1.0 + self.delta) ** (self.pmlf_k[job] + 1)
            return min(self.cp_value[job], boundary)
        return min(self.cp_value[job], self.target_abs[job])

    def instrumentation(self):
        self._finalize_epoch_row(self.last_time)
        self.plan = None  # row is final; avoid double logging
        return {
            "queue_moves": self.queue_moves,
            "epochs": self.k,
            "exhaustion_events": self.exhaust_events,
            "epoch_log": list(self.epoch_log),
        }


class SnapTwoStagePolicy(SnapPolicy):
    """SNAP with the overestimation reset of the two-stage scheme.

    At the first epoch boundary where at most g/epsilon jobs are alive,
    every alive job's prediction is reset to the smallest power of 1+delta
    at or above its processed amount; the per-machine feedback level is
    realigned with the processed amount at the same moment.
    """

    def __init__(self, delta, beta, g: int, epsilon: float, **kwargs):
        super().__init__(delta, beta, **kwargs)
        if g < 0:
            raise InvalidParameter(f"g must be >= 0, got {g}")
        if epsilon <= 0:
            raise InvalidParameter(f"epsilon must be > 0, got {epsilon}")
        self.g = g
        self.epsilon = epsilon

    def _init(self, view):
        super()._init(view)
        self.reset_done = False
        self.reset_epoch = None
        self.reset_snapshot = {}

    def _prediction_hook(self, view, alive):
        if self.reset_done or self.g <= 0:
            return
        if len(alive) <= self.g / self.epsilon:
            for j in alive:
                q = view.processed(j)
                self.p_hat[j] = (1.0 + self.delta) ** ceil_exp(self.delta, max(q, 1.0))
                self.pmlf_k[j] = floor_exp(self.delta, max(q, 1.0))
                self.reset_snapshot[j] = (q, self.p_hat[j])
            self.reset_done = True
            self.reset_epoch = self.k + 1

    def instrumentation(self):
        data = super().instrumentation()
        data["reset_epoch"] = self.reset_epoch
        return data


class HybridSnapPolicy(Policy):
    """Doubling-style dispatch with sparse milestones, then SNAP.

    Every job starts in group 1 with milestones c*(1+delta)^i * p_hat for
    i >= 1 and is dispatched like Doubling (least marginal residual
    increase).  A job that has hit `migrate_after` milestones moves
    permanently to group 2, which SNAP plans in epochs; between its
    migration and the next replan it stays on its current machine.  Each
    machine runs multilevel feedback over its assigned jobs with group 1
    ahead of group 2.
    """

    def __init__(
        self,
        c: float,
        delta: float,
        beta: float,
        tol: float = DEFAULT_TOL,
        max_iter: int = DEFAULT_MAX_ITER,
        migrate_after: int = 1,
        lane=None,
    ):
        if c < 1:
            raise InvalidParameter(f"c must be >= 1, got {c}")
        if delta <= 0:
            raise InvalidDelta(f"delta must be > 0, got {delta}")
        if not 0 < beta <= 1:
            raise InvalidParameter(f"beta must be in (0, 1], got {beta}")
        if migrate_after < 1:
            raise InvalidParameter(f"migrate_after must be >= 1, got {migrate_after}")
        self.c = c
        self.delta = delta
        self.beta = beta
        self.tol = tol
        self.max_iter = max_iter
        self.migrate_after = migrate_after
        self.lane = lane

    def on_event(self, view, event):
        if event.kind == SIM_START:
            self._init(view)
        elif event.kind == RELEASE:
            if view.t > EPS:
                raise WrongEnvironment("Hybrid SNAP requires all jobs released at t=0")
            self._admit(view, event.job)
        elif event.kind == COMPLETION:
            self._on_completion(view, event.job)
        elif event.kind == TIMER and event.tag == "plan":
            self._replan(view)
        elif event.kind == THRESHOLD:
            self._on_threshold(view, event.job, event.amount)
        self.last_time = view.t
        return self._decide(view)

    def _init(self, view):
        self.group = {}
        self.milestone_i = {}
        self.hits = {}
        self.machine_of = {}
        self.pmlf_k = {}
        self.seq = {}
        self.queue_moves = 0
        self.redispatches = {}
        self.pool = set()  # alive group-2 jobs
        self.plan = None
        self.k = 0
        self.rho = {}
        self.cp_value = {}
        self.exhausted_jobs = set()
        self.epoch_events = 0
        self.exhaust_events = 0
        self.quota = 0
        self.planned = set()
        self.epoch_log = []
        self.migrations_to_g2 = 0
        self.last_time = 0.0
        self._seq_counter = 0
        self._last_pf = None
        self._last_assign = {}
        self._need_plan = False

    def _next_seq(self):
        self._seq_counter += 1
        return self._seq_counter

    def _milestone_value(self, job, view):
        return self.c * (1.0 + self.delta) ** self.milestone_i[job] * view.p_hat(job)

    def _admit(self, view, job):
        self.group[job] = 1
        self.milestone_i[job] = 1
        self.hits[job] = 0
        self.pmlf_k[job] = floor_exp(self.delta, view.p_hat(job))
        self.seq[job] = self._next_seq()
        self.redispatches[job] = 0
        self._dispatch_group1(view, job, view.p_hat(job))

    def _dispatch_group1(self, view, job, remaining):
        queues = []
        for i in range(view.m):
            q = MachineQueue(i)
            for other, mach in self.machine_of.items():
                if mach == i and self.group.get(other) == 1:
                    rem = max(view.p_hat(other) - view.processed(other), 0.0)
                    q.insert(other, rem, view.rate(i, other))
            queues.append(q)
        machine = dispatch_min_increase(remaining, view.rates_for(job), queues)
        self.machine_of[job] = machine

    # -- group-2 (SNAP) planning ----------------------------------------

    def _replan(self, view):
        self._finalize_epoch_row(view.t)
        alive = [j for j in view.alive() if j in self.pool]
        if not alive:
            self.plan = None
            return
        self.k += 1
        lam = view.rates_matrix(alive)
        x0 = None
        if self._last_pf is not None:
            x0 = np.zeros((lam.shape[0], len(alive)))
            prev = {j: i for i, j in enumerate(self._last_pf.jobs)}
            for idx, j in enumerate(sorted(alive)):
                if j in prev:
                    x0[:, idx] = self._last_pf.x[:, prev[j]]
        self.plan = plan_epoch(
            alive,
            {j: view.processed(j) for j in alive},
            {j: view.p_hat(j) for j in alive},
            lam,
            self.delta,
            self.beta,
            tol=self.tol,
            max_iter=self.max_iter,
            x0=x0,
            lane=self.lane,
            k=self.k,
            start=view.t,
            prev_assignment={j: self.machine_of[j] for j in alive if j in self.machine_of},
        )
        self._last_pf = self.plan.pf
        self.quota = _quota(self.beta, self.plan.n_k)
        self.exhausted_jobs = set()
        self.epoch_events = 0
        self.planned = set(self.plan.jobs)
        resumed = {
            j for i, j in self._last_assign.items() if self.plan.assignment.get(j) == i
        }
        for j in sorted(self.plan.jobs, key=lambda j: (j not in resumed, j)):
            self.machine_of[j] = self.plan.assignment[j]
            self.seq[j] = self._next_seq()
            self.rho[j] = next_checkpoint_exp(
                view.p_hat(j), view.processed(j), self.delta
            )
            self.cp_value[j] = (1.0 + self.delta) ** self.rho[j]

    def _finalize_epoch_row(self, now):
        if self.plan is not None:
            self.epoch_log.append(
                {
                    "k": self.plan.k,
                    "e_k": self.plan.e_k,
                    "n_k": self.plan.n_k,
                    "l_k": self.plan.l_k,
                    "achieved_length": now - self.plan.e_k,
                    "exhaustions": self.epoch_events,
                    "distinct_exhausted": len(self.exhausted_jobs),
                }
            )

    # -- events ----------------------------------------------------------

    def _on_threshold(self, view, job, amount):
        replan = False
        if self.group[job] == 1:
            if amount >= self._milestone_value(job, view) - EPS:
                self.hits[job] += 1
                if self.hits[job] >= self.migrate_after:
                    self.group[job] = 2
                    self.pool.add(job)
                    self.seq[job] = self._next_seq()
                    self.migrations_to_g2 += 1
                    if self.plan is None:
                        replan = True
                else:
                    self.milestone_i[job] += 1
                    self.redispatches[job] += 1
                    del self.machine_of[job]
                    self._dispatch_group1(
                        view,
                        job,
                        max(self._milestone_value(job, view) - view.processed(job), 0.0),
                    )
        else:
            if job in self.planned and amount >= self.cp_value[job] - EPS:
                self.exhaust_events += 1
                self.epoch_events += 1
                self.exhausted_jobs.add(job)
                while (1.0 + self.delta) ** self.rho[job] <= view.processed(job) + EPS:
                    self.rho[job] += 1
                self.cp_value[job] = (1.0 + self.delta) ** self.rho[job]
                if self.epoch_events >= self.quota:
                    replan = True
        if amount >= (1.0 + self.delta) ** (self.pmlf_k[job] + 1) - EPS:
            self.pmlf_k[job] += 1
            self.seq[job] = self._next_seq()
            self.queue_moves += 1
        if replan:
            self._replan(view)

    def _on_completion(self, view, job):
        replan = False
        if job in self.cp_value and view.processed(job) >= self.cp_value[job] - EPS:
            self.exhaust_events += 1
            self.epoch_events += 1
            self.exhausted_jobs.add(job)
        self.cp_value.pop(job, None)
        if job in self.planned:
            self.planned.discard(job)
            if self.epoch_events >= self.quota or not self.planned:
                replan = True
        self.pool.discard(job)
        self.machine_of.pop(job, None)
        if replan:
            self._replan(view)

    # -- decisions ---------------------------------------------------------

    def _decide(self, view):
        alive = set(view.alive())
        if self.plan is None and any(
            self.group.get(j) == 2 for j in alive
        ):
            return Decision(timers={"plan": view.t})
        by_machine = {}
        for job, machine in self.machine_of.items():
            if job in alive:
                by_machine.setdefault(machine, []).append(job)
        assign = {}
        thresholds = {}
        for machine, jobs in by_machine.items():
            front = min(
                jobs, key=lambda j: (self.group[j], self.pmlf_k[j], self.seq[j])
            )
            assign[machine] = front
            boundary = (1.0 + self.delta) ** (self.pmlf_k[front] + 1)
            if self.group[front] == 1:
                theta = min(boundary, self._milestone_value(front, view))
            elif front in self.planned:
                theta = min(boundary, self.cp_value[front])
            else:
                theta = boundary
            thresholds[front] = theta
        self._last_assign = dict(assign)
        return Decision(assign=assign, thresholds=thresholds)

    def instrumentation(self):
        self._finalize_epoch_row(self.last_time)
        self.plan = None
        return {
            "queue_moves": self.queue_moves,
            "epochs": self.k,
            "exhaustion_events": self.exhaust_events,
            "epoch_log": list(self.epoch_log),
            "migrations_to_group2": self.migrations_to_g2,
            "redispatches": dict(self.redispatches),
        }


def epoch_preemptions(trace, epoch_log):
    """Fill per-epoch preemption counts from the coalesced trace.

    Returns epoch_log rows extended with a preemptions_in_epoch column;
    a preemption at an epoch boundary is charged to the ending epoch.
    """
    from .metrics import coalesce

    merged = coalesce(trace.segments)
    by_job = {}
    for seg in merged:
        by_job.setdefault(seg.job, []).append(seg)
    cut_times = []
    for segs in by_job.values():
        segs.sort(key=lambda s: s.t0)
        cut_times.extend(seg.t1 for seg in segs[:-1])
    rows = []
    for row in epoch_log:
        end = row["e_k"] + row["achieved_length"]
        count = sum(1 for t in cut_times if row["e_k"] < t <= end)
        rows.append({**row, "preemptions_in_epoch": count})
    return rows


def write_epoch_log(rows, path):
    """Write the epoch log in its documented CSV schema."""
    header = "k,e_k,n_k,l_k,achieved_length,exhaustions,preemptions_in_epoch"
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(
                f"{row['k']},{row['e_k']!r},{row['n_k']},{row['l_k']!r},"
                f"{row['achieved_length']!r},{row['exhaustions']},"
                f"{row.get('preemptions_in_epoch', '')}\n"
            )


def snap_policy(delta, beta, mode=EXPERIMENTAL, tol=DEFAULT_TOL, **kwargs) -> SnapPolicy:
    return SnapPolicy(delta, beta, mode=mode, tol=tol, **kwargs)


def snap_two_stage_policy(delta, beta, g, epsilon, tol=DEFAULT_TOL, **kwargs) -> SnapTwoStagePolicy:
    return SnapTwoStagePolicy(delta, beta, g, epsilon, tol=tol, **kwargs)


def hybrid_snap_policy(c, delta, beta, tol=DEFAULT_TOL, **kwargs) -> HybridSnapPolicy:
    return HybridSnapPolicy(c, delta, beta, tol=tol, **kwargs)
