import numpy as np
import pytest

from presched.errors import (
    InfeasibleJob,
    InvalidAssignment,
    NonterminatingPolicy,
    PolicyAssignedUnknownJob,
)
from presched.model import Instance, Job
from presched.pmlf import pmlf_policy
from presched.sim import (
    RELEASE,
    SIM_START,
    TIMER,
    Decision,
    Policy,
    simulate,
)
from presched.metrics import compute_metrics
from presched.validate import validate_trace

from conftest import random_unrelated


class RunOnlyJob(Policy):
    """Single machine, run whatever is alive (lowest id first)."""

    def on_event(self, view, event):
        alive = view.alive()
        if not alive:
            return Decision()
        return Decision(assign={0: alive[0]})


def test_single_job_runs_to_completion():
    inst = Instance.single([Job(0, 5, 1)])
    trace = simulate(inst, RunOnlyJob())
    assert trace.completion == {0: 5.0}
    assert len(trace.segments) == 1
    seg = trace.segments[0]
    assert (seg.t0, seg.t1, seg.machine) == (0.0, 5.0, 0)


def test_pmlf_two_job_example(two_job_single):
    trace = simulate(inst := two_job_single, pmlf_policy(1.0))
    metrics = compute_metrics(inst, trace, opt_value=8.0)
    assert trace.completion == {1: 4.0, 2: 6.0}
    assert metrics.total_completion == 10.0
    assert metrics.preemptions == 1
    assert metrics.ratio == pytest.approx(1.25)


def test_two_identical_machines_parallel():
    inst = Instance.identical([Job(0, 1, 1), Job(1, 1, 1)], 2)

    class OneEach(Policy):
        def on_event(self, view, event):
            alive = view.alive()
            return Decision(assign={i: j for i, j in enumerate(alive[: view.m])})

    trace = simulate(inst, OneEach())
    assert trace.completion == {0: 1.0, 1: 1.0}


def test_release_times_respected():
    inst = Instance.single([Job(0, 2, 1, r=0.0), Job(1, 1, 1, r=3.0)])
    trace = simulate(inst, RunOnlyJob())
    assert trace.completion == {0: 2.0, 1: 4.0}
    assert validate_trace(inst, trace).ok
    # idle gap [2, 3] leaves no segment
    assert all(not (2.0 < s.t0 < 3.0) for s in trace.segments)


def test_infeasible_job_raises():
    inst = Instance.single([Job(0, 1, 1)])
    inst.rates[0, 0] = 0.0  # break feasibility after construction
    with pytest.raises(InfeasibleJob):
        simulate(inst, RunOnlyJob())


def test_unknown_job_assignment_raises():
    class Bad(Policy):
        def on_event(self, view, event):
            return Decision(assign={0: 99})

    with pytest.raises(PolicyAssignedUnknownJob):
        simulate(Instance.single([Job(0, 1, 1)]), Bad())


def test_duplicate_assignment_raises():
    class Bad(Policy):
        def on_event(self, view, event):
            alive = view.alive()
            if alive:
                return Decision(assign={0: alive[0], 1: alive[0]})
            return Decision()

    with pytest.raises(InvalidAssignment):
        simulate(Instance.identical([Job(0, 1, 1)], 2), Bad())


def test_zero_rate_assignment_raises():
    inst = Instance.unrelated([Job(0, 1, 1), Job(1, 1, 1)], [[1, 0], [0, 1]])

    class Bad(Policy):
        def on_event(self, view, event):
            return Decision(assign={0: 1})

    with pytest.raises(InvalidAssignment):
        simulate(inst, Bad())


def test_idle_policy_detected_as_nonterminating():
    class Idle(Policy):
        def on_event(self, view, event):
            return Decision()

    with pytest.raises(NonterminatingPolicy):
        simulate(Instance.single([Job(0, 1, 1)]), Idle())


def test_threshold_spin_detected_as_nonterminating():
    class Spin(Policy):
        def on_event(self, view, event):
            alive = view.alive()
            if not alive:
                return Decision()
            # re-register an already-passed threshold forever
            return Decision(assign={0: alive[0]}, thresholds={alive[0]: 0.0})

    with pytest.raises(NonterminatingPolicy):
        simulate(Instance.single([Job(0, 2, 1)]), Spin())


def test_timer_fires_and_is_one_shot():
    fired = []

    class WithTimer(Policy):
        def on_event(self, view, event):
            if event.kind == SIM_START:
                self.pending = {"ping": 0.5}
            if event.kind == TIMER:
                fired.append(event.tag)
                self.pending = {}
            alive = view.alive()
            # a Decision replaces the registration state wholesale, so the
            # timer is restated until it fires
            return Decision(assign={0: alive[0]} if alive else {}, timers=self.pending)

    inst = Instance.single([Job(0, 2, 1)])
    simulate(inst, WithTimer())
    assert fired == ["ping"]


def test_policy_object_reusable_across_runs():
    # state re-initializes on the sim_start event
    inst = Instance.single([Job(0, 3, 1), Job(1, 5, 2)])
    policy = pmlf_policy(1.0)
    first = simulate(inst, policy)
    second = simulate(inst, policy)
    assert first.completion == second.completion
    assert first.annotations["queue_moves"] == second.annotations["queue_moves"]


def test_view_hides_true_sizes():
    inst = Instance.single([Job(0, 7, 3)])
    seen = {}

    class Probe(Policy):
        def on_event(self, view, event):
            if event.kind == RELEASE:
                seen["p_hat"] = view.p_hat(event.job)
                seen["has_p"] = hasattr(view, "p")
            alive = view.alive()
            return Decision(assign={0: alive[0]} if alive else {})

    simulate(inst, Probe())
    assert seen == {"p_hat": 3.0, "has_p": False}


def test_simulate_output_always_validates():
    rng = np.random.default_rng(5)
    for _ in range(25):
        inst = random_unrelated(rng)

        class Greedy(Policy):
            def on_event(self, view, event):
                alive = view.alive()
                assign = {}
                used = set()
                for i in range(view.m):
                    for j in alive:
                        if j not in used and view.rate(i, j) > 0:
                            assign[i] = j
                            used.add(j)
                            break
                return Decision(assign=assign)

        trace = simulate(inst, Greedy())
        report = validate_trace(inst, trace)
        assert report.ok, report.summary()


def test_work_conservation():
    from presched.snap import snap_policy

    rng = np.random.default_rng(11)
    for _ in range(10):
        inst = random_unrelated(rng)
        policy = (
            pmlf_policy(0.5)
            if inst.m == 1
            else snap_policy(1.0, 0.6, tol=1e-4, max_iter=500)
        )
        trace = simulate(inst, policy)
        total_work = sum(s.work for s in trace.segments)
        assert total_work == pytest.approx(sum(j.p for j in inst.jobs), rel=1e-6)
