"""Non-clairvoyant simulation driver.

The driver owns true sizes; policies observe only released unfinished job
ids, predictions, weights, the rate matrix, and processed amounts.  A policy
reacts to events (start, releases, completions, threshold crossings, timers)
by returning a Decision: a machine-to-job assignment plus the thresholds and
timers it wants armed.  The driver advances time to the earliest of a hidden
completion, a registered threshold on a running job, a timer, or a release.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (
    InfeasibleJob,
    InvalidAssignment,
    NonterminatingPolicy,
    PolicyAssignedUnknownJob,
)
from .model import EPS, Instance, Segment, Trace

SIM_START = "sim_start"
RELEASE = "release"
COMPLETION = "completion"
THRESHOLD = "threshold"
TIMER = "timer"

# Delivery order for simultaneous events; within a kind, job id ascending.
_KIND_ORDER = {SIM_START: -1, COMPLETION: 0, RELEASE: 1, THRESHOLD: 2, TIMER: 3}


@dataclass(frozen=True)
class Event:
    kind: str
    time: float
    job: int | None = None
    amount: float | None = None  # threshold value that was crossed
    tag: str | None = None  # timer label


@dataclass
class Decision:
    """Complete desired control state after an event.

    assign maps machine id -> job id (machines absent stay idle); thresholds
    maps job id -> absolute processed amount at which to interrupt; timers
    maps tag -> absolute time.  Threshold/timer maps replace earlier
    registrations wholesale.
    """

    assign: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)
    timers: dict = field(default_factory=dict)


class Policy:
    """Behavioral contract for schedulers driven by simulate().

    Implementations must derive all decisions from the observable view; true
    sizes are never exposed.  State must be (re)initialized on the sim_start
    event so one policy object can serve several runs.
    """

    def on_event(self, view: "SimView", event: Event) -> Decision:
        raise NotImplementedError

    def instrumentation(self) -> dict:
        """Counters merged into Trace.annotations after the run."""
        return {}


class SimView:
    """Observable simulation state handed to policies."""

    def __init__(self, instance: Instance):
        self._inst = instance
        self.t = 0.0
        self._released = set()
        self._done = set()
        self._q = {j.id: 0.0 for j in instance.jobs}

    @property
    def m(self) -> int:
        return self._inst.m

    def alive(self):
        return sorted(self._released - self._done)

    def processed(self, job_id) -> float:
        return self._q[job_id]

    def p_hat(self, job_id) -> float:
        return self._inst.job(job_id).p_hat

    def weight(self, job_id) -> float:
        return self._inst.job(job_id).w

    def rate(self, machine, job_id) -> float:
        return self._inst.rate(machine, job_id)

    def rates_for(self, job_id):
        return self._inst.rates_for(job_id)

    def rates_matrix(self, job_ids):
        return self._inst.rates_matrix(job_ids)


def _order_events(events):
    return sorted(
        events, key=lambda e: (_KIND_ORDER[e.kind], e.job if e.job is not None else -1, e.tag or "")
    )


class _SegmentLog:
    """Per-machine segment accumulator that coalesces contiguous runs."""

    def __init__(self):
        self.open = {}  # machine -> [job, t0, t1, rate]
        self.closed = []

    def extend(self, machine, job, t0, t1, rate):
        cur = self.open.get(machine)
        if cur is not None and cur[0] == job and cur[2] == t0:
            cur[2] = t1
            return
        self.flush(machine)
        self.open[machine] = [job, t0, t1, rate]

    def flush(self, machine):
        cur = self.open.pop(machine, None)
        if cur is not None:
            self.closed.append(Segment(cur[0], machine, cur[1], cur[2], cur[3]))

    def finish(self):
        for machine in list(self.open):
            self.flush(machine)
        return sorted(self.closed, key=lambda s: (s.t0, s.machine))


def simulate(instance: Instance, policy: Policy, record_decisions: bool = False) -> Trace:
    """Run a policy on an instance and return its validated-shape Trace.

    Raises InfeasibleJob for an all-zero rate column, PolicyAssignedUnknownJob
    or InvalidAssignment for malformed decisions, and NonterminatingPolicy
    when repeated same-time events make no progress.
    """
    for job in instance.jobs:
        if not (instance.rates_for(job.id) > 0).any():
            raise InfeasibleJob(f"job {job.id} has no machine with positive rate")

    n = instance.n
    view = SimView(instance)
    q = view._q
    done = view._done
    released = view._released
    p = {j.id: j.p for j in instance.jobs}
    pending_release = sorted(
        (j.r, j.id) for j in instance.jobs
    )  # (time, id), consumed front to back
    thresholds: dict = {}
    timers: dict = {}
    assign: dict = {}
    log = _SegmentLog()
    completion: dict = {}
    decision_stream = []
    t = 0.0
    stall = 0

    batch = [Event(SIM_START, 0.0)]
    while pending_release and pending_release[0][0] <= EPS:
        _, jid = pending_release.pop(0)
        released.add(jid)
        batch.append(Event(RELEASE, 0.0, job=jid))

    while True:
        view.t = t
        decision = None
        for event in _order_events(batch):
            decision = policy.on_event(view, event)
        if decision is not None:
            thresholds = dict(decision.thresholds)
            timers = dict(decision.timers)
            assign = _check_assignment(decision.assign, instance, released, done)
            if record_decisions:
                decision_stream.append((t, tuple(sorted(assign.items()))))
        if len(done) >= n:
            break

        # Earliest interrupt: hidden completion, threshold, timer, release.
        t_next = None
        for machine, jid in assign.items():
            rate = instance.rate(machine, jid)
            t_c = t + (p[jid] - q[jid]) / rate
            t_next = t_c if t_next is None else min(t_next, t_c)
            theta = thresholds.get(jid)
            if theta is not None and theta > q[jid] + EPS:
                t_th = t + (theta - q[jid]) / rate
                t_next = min(t_next, t_th)
            elif theta is not None:
                t_next = min(t_next, t)  # already-crossed threshold fires now
        for when in timers.values():
            t_next = when if t_next is None else min(t_next, max(when, t))
        if pending_release:
            t_rel = pending_release[0][0]
            t_next = t_rel if t_next is None else min(t_next, t_rel)
        if t_next is None:
            raise NonterminatingPolicy(
                f"t={t}: all machines idle with {n - len(done)} jobs unfinished and no pending event"
            )
        t_next = max(t_next, t)

        if t_next > t + EPS:
            for machine, jid in assign.items():
                rate = instance.rate(machine, jid)
                q[jid] += rate * (t_next - t)
                log.extend(machine, jid, t, t_next, rate)
            stall = 0
        else:
            t_next = t
            stall += 1
            if stall > 4 * n + 64:
                raise NonterminatingPolicy(f"no progress across repeated events at t={t}")

        batch = []
        running = set(assign.values())
        completing = set()
        for jid in sorted(running):
            if q[jid] >= p[jid] - EPS:
                q[jid] = p[jid]
                done.add(jid)
                completing.add(jid)
                completion[jid] = t_next
                batch.append(Event(COMPLETION, t_next, job=jid))
        while pending_release and pending_release[0][0] <= t_next + EPS:
            _, jid = pending_release.pop(0)
            released.add(jid)
            batch.append(Event(RELEASE, t_next, job=jid))
        for jid, theta in list(thresholds.items()):
            if jid in completing or jid not in running:
                continue
            if q[jid] >= theta - EPS:
                del thresholds[jid]
                batch.append(Event(THRESHOLD, t_next, job=jid, amount=theta))
        for tag, when in list(timers.items()):
            if when <= t_next + EPS:
                del timers[tag]
                batch.append(Event(TIMER, t_next, tag=tag))
        for jid in completing:
            for machine, assigned in list(assign.items()):
                if assigned == jid:
                    log.flush(machine)
                    del assign[machine]
        t = t_next

    annotations = dict(policy.instrumentation())
    if record_decisions:
        annotations["decisions"] = decision_stream
    return Trace(log.finish(), completion, annotations)


def _check_assignment(assign, instance, released, done):
    checked = {}
    used = set()
    for machine, jid in assign.items():
        if jid is None:
            continue
        if not (0 <= machine < instance.m):
            raise InvalidAssignment(f"unknown machine {machine}")
        if jid not in instance._col:
            raise PolicyAssignedUnknownJob(f"unknown job {jid}")
        if jid not in released or jid in done:
            raise PolicyAssignedUnknownJob(f"job {jid} is not released and unfinished")
        if jid in used:
            raise InvalidAssignment(f"job {jid} assigned to several machines")
        if instance.rate(machine, jid) <= 0:
            raise InvalidAssignment(f"job {jid} assigned to machine {machine} with zero rate")
        used.add(jid)
        checked[machine] = jid
    return checked


def stable_assign(priority_jobs, m, prev_assign, feasible=None):
    """Map the first <= m priority jobs to machines, preferring continuity.

    A job keeps its previous machine when still selected; remaining jobs take
    free machines in ascending id order.  feasible(machine, job) can veto
    pairs (unrelated environments).
    """
    selected = priority_jobs[:m]
    target = {}
    taken = set()
    job_prev = {j: i for i, j in prev_assign.items()}
    for jid in selected:
        i = job_prev.get(jid)
        if i is not None and i not in taken and (feasible is None or feasible(i, jid)):
            target[i] = jid
            taken.add(i)
    free = [i for i in range(m) if i not in taken]
    for jid in selected:
        if jid in target.values():
            continue
        for i in free:
            if feasible is None or feasible(i, jid):
                target[i] = jid
                free.remove(i)
                break
    return target
