"""Prediction-driven comparison policies: Blind, Doubling, Round-Robin.

Blind and Doubling dispatch arriving jobs to the machine whose SJF residual
estimate grows the least; Blind then trusts predictions completely and never
preempts, while Doubling doubles a job's live estimate whenever its
processing exceeds it and re-dispatches the job as a fresh arrival.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

from .errors import (
    InvalidParameter,
    NoFeasibleMachine,
    WrongEnvironment,
)
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


@dataclass
class MachineQueue:
    """Jobs waiting on one machine, ordered by predicted remaining time.

    entries hold (predicted remaining time, job id, predicted remaining
    size); the time of an entry is its size divided by the machine's rate
    for that job.
    """

    machine: int
    entries: list = field(default_factory=list)

    def insert(self, job, size, rate):
        if rate <= 0:
            raise NoFeasibleMachine(f"job {job} has zero rate on machine {self.machine}")
        bisect.insort(self.entries, (size / rate, job, size))

    def remove(self, job):
        self.entries = [e for e in self.entries if e[1] != job]

    def times(self):
        return [t for t, _, _ in self.entries]


def residual_estimate(queue: MachineQueue) -> float:
    """Total completion time SJF would incur on this queue's entries."""
    total = 0.0
    acc = 0.0
    for t in queue.times():
        acc += t
        total += acc
    return total


def dispatch_min_increase(size: float, rates_row, queues) -> int:
    """Machine whose residual estimate grows least when the job joins it.

    Machines with zero rate for the job are skipped; ties break toward the
    lowest machine id.
    """
    best = None
    best_inc = None
    for queue in queues:
        rate = rates_row[queue.machine]
        if rate <= 0:
            continue
        before = residual_estimate(queue)
        t_new = size / rate
        times = sorted(queue.times() + [t_new])
        acc = 0.0
        after = 0.0
        for t in times:
            acc += t
            after += acc
        inc = after - before
        if best_inc is None or inc < best_inc - 1e-15:
            best = queue.machine
            best_inc = inc
    if best is None:
        raise NoFeasibleMachine("job has no machine with positive rate")
    return best


class BlindPolicy(Policy):
    """Immediate-dispatch SJF with total trust in predictions.

    Each arriving job goes to the machine with the minimum marginal residual
    increase; every machine runs its queue in ascending predicted time and
    each started job runs to its true completion.  No preemptions occur by
    construction; a job that overruns its prediction keeps its machine and
    position.

    A front job starts only once it has accrued work, so simultaneous
    releases are all queued before anything is irrevocably started.
    """

    def on_event(self, view, event):
        if event.kind == SIM_START:
            self.waiting = {i: MachineQueue(i) for i in range(view.m)}
            self.started = {}  # machine -> job id, committed (work accrued)
        else:
            self._commit(view)
        if event.kind == RELEASE:
            self._dispatch(view, event.job)
        elif event.kind == COMPLETION:
            for machine, job in list(self.started.items()):
                if job == event.job:
                    del self.started[machine]
        return self._decide()

    def _commit(self, view):
        """Lock in front jobs that actually began running since last event."""
        for machine, job in self._assignment().items():
            if machine not in self.started and view.processed(job) > 0:
                self.waiting[machine].remove(job)
                self.started[machine] = job

    def _dispatch(self, view, job):
        # the committed job's predicted remainder still occupies its machine
        snapshot = []
        for i in range(view.m):
            q = MachineQueue(i, list(self.waiting[i].entries))
            run = self.started.get(i)
            if run is not None:
                rem = max(view.p_hat(run) - view.processed(run), 0.0)
                q.insert(run, rem, view.rate(i, run))
            snapshot.append(q)
        machine = dispatch_min_increase(view.p_hat(job), view.rates_for(job), snapshot)
        self.waiting[machine].insert(job, view.p_hat(job), view.rate(machine, job))

    def _assignment(self):
        assign = dict(self.started)
        for machine, q in self.waiting.items():
            if machine not in assign and q.entries:
                assign[machine] = q.entries[0][1]
        return assign

    def _decide(self):
        return Decision(assign=self._assignment())


class DoublingPolicy(Policy):
    """Immediate-dispatch SJF with geometric estimate growth.

    Each job carries a live estimate, initially its prediction.  Machines
    run the assigned job with the smallest predicted remaining time (ties by
    id).  When a job's processed work reaches its estimate without
    completing, the estimate doubles and the job is re-dispatched as a fresh
    arrival to the machine with the least marginal residual increase.
    """

    def on_event(self, view, event):
        if event.kind == SIM_START:
            self.estimate = {}
            self.machine_of = {}
            self.redispatches = {}
        elif event.kind == RELEASE:
            self.estimate[event.job] = view.p_hat(event.job)
            self.redispatches[event.job] = 0
            self._dispatch(view, event.job)
        elif event.kind == COMPLETION:
            self.machine_of.pop(event.job, None)
        elif event.kind == THRESHOLD:
            job = event.job
            self.estimate[job] *= 2.0
            self.redispatches[job] += 1
            del self.machine_of[job]
            self._dispatch(view, job)
        return self._decide(view)

    def _remaining(self, view, job):
        return max(self.estimate[job] - view.processed(job), 0.0)

    def _dispatch(self, view, job):
        queues = []
        for i in range(view.m):
            q = MachineQueue(i)
            for other, mach in self.machine_of.items():
                if mach == i:
                    q.insert(other, self._remaining(view, other), view.rate(i, other))
            queues.append(q)
        machine = dispatch_min_increase(
            self._remaining(view, job), view.rates_for(job), queues
        )
        self.machine_of[job] = machine

    def _decide(self, view):
        assign = {}
        thresholds = {}
        by_machine = {}
        for job, machine in self.machine_of.items():
            by_machine.setdefault(machine, []).append(job)
        for machine, jobs in by_machine.items():
            jobs.sort(key=lambda j: (self._remaining(view, j) / view.rate(machine, j), j))
            job = jobs[0]
            assign[machine] = job
            if self.estimate[job] > view.processed(job) + EPS:
                thresholds[job] = self.estimate[job]
        return Decision(assign=assign, thresholds=thresholds)

    def instrumentation(self):
        return {"redispatches": dict(self.redispatches)}


class RoundRobinPolicy(Policy):
    """Reference baseline: cycle active jobs, one quantum of work each.

    Supports single and identical machines only.
    """

    def __init__(self, quantum: float):
        if quantum <= 0:
            raise InvalidParameter(f"quantum must be > 0, got {quantum}")
        self.quantum = quantum

    def on_event(self, view, event):
        if event.kind == SIM_START:
            self.ring = []
            self.prev = {}
            self._checked_env = False
        elif event.kind == RELEASE:
            if not self._checked_env:
                self._check_env(view, event.job)
            self.ring.append(event.job)
        elif event.kind == COMPLETION:
            self.ring.remove(event.job)
        elif event.kind == THRESHOLD:
            self.ring.remove(event.job)
            self.ring.append(event.job)
        return self._decide(view)

    def _check_env(self, view, job):
        rates = view.rates_for(job)
        if any(abs(r - rates[0]) > EPS for r in rates):
            raise WrongEnvironment("round robin supports single/identical machines only")
        self._checked_env = True

    def _decide(self, view):
        selected = self.ring[: view.m]
        assign = stable_assign(selected, view.m, self.prev)
        self.prev = assign
        thresholds = {j: view.processed(j) + self.quantum for j in assign.values()}
        return Decision(assign=assign, thresholds=thresholds)


def blind_policy() -> BlindPolicy:
    return BlindPolicy()


def doubling_policy() -> DoublingPolicy:
    return DoublingPolicy()


def round_robin_policy(quantum: float) -> RoundRobinPolicy:
    return RoundRobinPolicy(quantum)
