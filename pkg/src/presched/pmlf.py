"""Predicted multilevel-feedback policies.

Jobs live in FIFO queues indexed by a geometric scale: a job enters the
queue whose index is the largest k with (1+delta)^k <= predicted size, runs
when it is the front job of the lowest non-empty queue, and moves to the
tail of queue k+1 once its total processed work reaches (1+delta)^(k+1).
Queue indices are found by exact integer exponent search, never by floating
logarithms, so boundary sizes classify deterministically.
"""

from __future__ import annotations

from collections import deque

from .errors import InvalidDelta, InvalidParameter, WrongEnvironment
from .model import EPS
from .sim import (
    COMPLETION,
    RELEASE,
    SIM_START,
    THRESHOLD,
    Decision,
    Policy,
    stable_assign,
)


def floor_exp(delta: float, value: float) -> int:
    """Largest k >= 0 with (1+delta)^k <= value (value >= 1)."""
    if value < 1.0:
        return 0
    k = 0
    while (1.0 + delta) ** (k + 1) <= value:
        k += 1
    return k


def ceil_exp(delta: float, value: float) -> int:
    """Smallest k >= 0 with (1+delta)^k >= value."""
    if value <= 1.0:
        return 0
    k = 0
    while (1.0 + delta) ** k < value:
        k += 1
    return k


class _QueueBank:
    """The FIFO queue array shared by all multilevel-feedback variants."""

    def __init__(self, delta):
        self.delta = delta
        self.queues = {}  # index -> deque of job ids
        self.index = {}  # job id -> queue index
        self.moves = 0
        self.moves_by_job = {}

    def insert(self, job, k):
        self.queues.setdefault(k, deque()).append(job)
        self.index[job] = k

    def insert_by_prediction(self, job, p_hat):
        self.insert(job, floor_exp(self.delta, p_hat))

    def remove(self, job):
        k = self.index.pop(job)
        self.queues[k].remove(job)
        if not self.queues[k]:
            del self.queues[k]

    def bump(self, job):
        """Move a job that exhausted its level to the tail of the next queue."""
        k = self.index[job]
        self.queues[k].remove(job)
        if not self.queues[k]:
            del self.queues[k]
        self.insert(job, k + 1)
        self.moves += 1
        self.moves_by_job[job] = self.moves_by_job.get(job, 0) + 1

    def boundary(self, job) -> float:
        return (1.0 + self.delta) ** (self.index[job] + 1)

    def front_jobs(self, count):
        """The first `count` jobs in lexicographic (queue, position) order."""
        out = []
        for k in sorted(self.queues):
            for job in self.queues[k]:
                out.append(job)
                if len(out) == count:
                    return out
        return out

    def rebuild_by_processed(self, jobs_with_q):
        """Re-enqueue every job by its processed amount, in the given order."""
        self.queues = {}
        self.index = {}
        for job, q in jobs_with_q:
            self.insert(job, floor_exp(self.delta, q) if q >= 1.0 else 0)


class PMLFPolicy(Policy):
    """Single-machine predicted MLF."""

    def __init__(self, delta: float):
        if delta <= 0:
            raise InvalidDelta(f"delta must be > 0, got {delta}")
        self.delta = delta

    def on_event(self, view, event):
        if event.kind == SIM_START:
            self.bank = _QueueBank(self.delta)
        elif event.kind == RELEASE:
            self.bank.insert_by_prediction(event.job, view.p_hat(event.job))
        elif event.kind == COMPLETION:
            self.bank.remove(event.job)
        elif event.kind == THRESHOLD:
            self.bank.bump(event.job)
        return self._decide(view)

    def _decide(self, view):
        front = self.bank.front_jobs(1)
        if not front:
            return Decision()
        job = front[0]
        return Decision(assign={0: job}, thresholds={job: self.bank.boundary(job)})

    def instrumentation(self):
        return {
            "queue_moves": self.bank.moves,
            "queue_moves_by_job": dict(self.bank.moves_by_job),
        }


class PMLFIdenticalPolicy(Policy):
    """Predicted MLF on m identical machines.

    At each event the first min(m, active) jobs in lexicographic
    (queue, position) order run, one per machine; machine choice prefers
    continuity so an undisturbed job never context-switches.
    """

    def __init__(self, delta: float, m: int):
        if delta <= 0:
            raise InvalidDelta(f"delta must be > 0, got {delta}")
        if m < 1:
            raise InvalidParameter(f"m must be >= 1, got {m}")
        self.delta = delta
        self.m = m

    def on_event(self, view, event):
        if event.kind == SIM_START:
            self.bank = _QueueBank(self.delta)
            self.prev = {}
            self._checked_env = False
        elif event.kind == RELEASE:
            if not self._checked_env:
                self._check_env(view, event.job)
            self.bank.insert_by_prediction(event.job, view.p_hat(event.job))
        elif event.kind == COMPLETION:
            self.bank.remove(event.job)
        elif event.kind == THRESHOLD:
            self.bank.bump(event.job)
        return self._decide(view)

    def _check_env(self, view, job):
        rates = view.rates_for(job)
        if view.m != self.m or any(abs(r - rates[0]) > EPS for r in rates):
            raise WrongEnvironment("identical-machine PMLF needs uniform rates")
        self._checked_env = True

    def _decide(self, view):
        front = self.bank.front_jobs(self.m)
        assign = stable_assign(front, self.m, self.prev)
        self.prev = assign
        thresholds = {j: self.bank.boundary(j) for j in assign.values()}
        return Decision(assign=assign, thresholds=thresholds)

    def instrumentation(self):
        return {
            "queue_moves": self.bank.moves,
            "queue_moves_by_job": dict(self.bank.moves_by_job),
        }


class PMLFAdaptedPolicy(PMLFPolicy):
    """PMLF with the one-shot repair for overestimated predictions.

    Runs plain PMLF until the number of unfinished jobs drops to g/gamma or
    below; at that moment every unfinished job is re-enqueued by its
    processed amount (id order), and plain PMLF continues.  The trigger is
    evaluated at completions and at the first event after the release batch,
    so a simultaneous release burst cannot fire it at a partial count.
    """

    def __init__(self, delta: float, g: int, gamma: float):
        super().__init__(delta)
        if g < 0:
            raise InvalidParameter(f"g must be >= 0, got {g}")
        if not 0 < gamma < 1:
            raise InvalidParameter(f"gamma must be in (0,1), got {gamma}")
        self.g = g
        self.gamma = gamma

    def on_event(self, view, event):
        if event.kind == SIM_START:
            self.reset_done = False
            self.reset_time = None
        decision = super().on_event(view, event)
        if not self.reset_done and self.g > 0:
            settled = event.kind == COMPLETION or view.t > 0
            alive = view.alive()
            if settled and alive and len(alive) <= self.g / self.gamma:
                self.bank.rebuild_by_processed(
                    [(j, view.processed(j)) for j in alive]
                )
                self.reset_done = True
                self.reset_time = view.t
                decision = self._decide(view)
        return decision


def pmlf_policy(delta: float) -> PMLFPolicy:
    return PMLFPolicy(delta)


def pmlf_identical_policy(delta: float, m: int) -> PMLFIdenticalPolicy:
    return PMLFIdenticalPolicy(delta, m)


def pmlf_adapted_policy(delta: float, g: int, gamma: float) -> PMLFAdaptedPolicy:
    return PMLFAdaptedPolicy(delta, g, gamma)
