import numpy as np
import pytest

from presched.errors import InvalidDelta, InvalidParameter, WrongEnvironment
from presched.metrics import compute_metrics
from presched.model import Instance, Job
from presched.optimum import brute_force_opt, opt_single_machine, srpt_lower_bound
from presched.pmlf import (
    ceil_exp,
    floor_exp,
    pmlf_adapted_policy,
    pmlf_identical_policy,
    pmlf_policy,
)
from presched.sim import simulate
from presched.validate import validate_trace

from conftest import random_single


def test_exponent_search():
    assert floor_exp(1.0, 1.0) == 0
    assert floor_exp(1.0, 2.0) == 1
    assert floor_exp(1.0, 3.9) == 1
    assert floor_exp(1.0, 4.0) == 2
    assert floor_exp(0.5, 1.5) == 1
    assert ceil_exp(1.0, 1.0) == 0
    assert ceil_exp(1.0, 3.0) == 2
    assert ceil_exp(1.0, 4.0) == 2
    assert ceil_exp(1.0, 5.0) == 3


def test_invalid_delta():
    with pytest.raises(InvalidDelta):
        pmlf_policy(0.0)
    with pytest.raises(InvalidDelta):
        pmlf_identical_policy(-1.0, 2)


def test_two_job_replay(two_job_single):
    trace = simulate(two_job_single, pmlf_policy(1.0))
    assert trace.completion == {1: 4.0, 2: 6.0}
    m = compute_metrics(two_job_single, trace)
    assert m.queue_moves == 1  # B moves to the next level at q=2
    assert m.preemptions == 1


def test_perfect_power_predictions_run_nonpreemptively():
    # distinct powers of two, exact predictions: queue order equals SPT
    jobs = [Job(i, 2.0**i, 2.0**i) for i in range(4)]
    inst = Instance.single(jobs)
    trace = simulate(inst, pmlf_policy(1.0))
    m = compute_metrics(inst, trace, opt_single_machine(inst))
    assert m.preemptions == 0
    assert m.ratio == pytest.approx(1.0)


def test_single_job_queue_moves():
    # p=4, p_hat=1: level moves at q=2; the q=4 threshold coincides with
    # completion, which wins, so exactly one move and no preemption
    inst = Instance.single([Job(0, 4, 1)])
    trace = simulate(inst, pmlf_policy(1.0))
    m = compute_metrics(inst, trace)
    assert m.queue_moves == 1
    assert m.preemptions == 0
    inst = Instance.single([Job(0, 5, 1)])
    trace = simulate(inst, pmlf_policy(1.0))
    assert compute_metrics(inst, trace).queue_moves == 2  # at q=2 and q=4


def test_queue_move_bound_randomized():
    rng = np.random.default_rng(21)
    for _ in range(40):
        inst = random_single(rng)
        trace = simulate(inst, pmlf_policy(1.0))
        by_job = trace.annotations["queue_moves_by_job"]
        for job in inst.jobs:
            moves = by_job.get(job.id, 0)
            bound = floor_exp(1.0, job.p) - floor_exp(1.0, job.p_hat) + 1
            assert moves <= bound


def test_competitive_bound_spot_checks():
    rng = np.random.default_rng(8)
    for delta in (0.5, 1.0):
        for _ in range(30):
            inst = random_single(rng)
            trace = simulate(inst, pmlf_policy(delta))
            m = compute_metrics(inst, trace, opt_single_machine(inst))
            assert m.ratio <= 2 + 2 * delta + 1e-9
            assert m.preemptions <= m.queue_moves


def test_release_times_bound():
    rng = np.random.default_rng(14)
    for _ in range(25):
        n = int(rng.integers(1, 8))
        jobs = [
            Job(j, float(rng.integers(1, 30)), 1.0, r=float(rng.integers(0, 20)))
            for j in range(n)
        ]
        jobs = [Job(j.id, j.p, float(rng.integers(1, int(j.p) + 1)), j.r) for j in jobs]
        inst = Instance.single(jobs)
        trace = simulate(inst, pmlf_policy(1.0))
        assert validate_trace(inst, trace).ok
        total = sum(trace.completion.values())
        assert total <= (3 + 2 * 1.0) * srpt_lower_bound(inst) + 1e-9


def test_identical_small_example():
    inst = Instance.identical([Job(i, 1, 1) for i in range(3)], 2)
    trace = simulate(inst, pmlf_identical_policy(1.0, 2))
    assert sorted(trace.completion.values()) == [1.0, 1.0, 2.0]
    assert sum(trace.completion.values()) == pytest.approx(brute_force_opt(inst))


def test_identical_m_at_least_n():
    inst = Instance.identical([Job(i, float(i + 1), 1) for i in range(3)], 4)
    trace = simulate(inst, pmlf_identical_policy(1.0, 4))
    for job in inst.jobs:
        assert trace.completion[job.id] == pytest.approx(job.p)


def test_identical_m1_equals_single():
    rng = np.random.default_rng(31)
    for _ in range(10):
        inst = random_single(rng, n_max=6)
        t1 = simulate(inst, pmlf_policy(1.0), record_decisions=True)
        t2 = simulate(inst, pmlf_identical_policy(1.0, 1), record_decisions=True)
        assert t1.annotations["decisions"] == t2.annotations["decisions"]
        assert t1.completion == t2.completion


def test_identical_competitive_bound_vs_brute_force():
    rng = np.random.default_rng(17)
    for _ in range(15):
        n = int(rng.integers(2, 7))
        m = int(rng.integers(1, 4))
        jobs = []
        for j in range(n):
            p = float(rng.integers(1, 12))
            jobs.append(Job(j, p, float(rng.integers(1, int(p) + 1))))
        inst = Instance.identical(jobs, m)
        trace = simulate(inst, pmlf_identical_policy(1.0, m))
        total = sum(trace.completion.values())
        assert total <= (2 + 2 * 1.0) * brute_force_opt(inst) + 1e-9


def test_identical_wrong_environment():
    inst = Instance.unrelated([Job(0, 1, 1)], [[1.0], [2.0]])
    with pytest.raises(WrongEnvironment):
        simulate(inst, pmlf_identical_policy(1.0, 2))


def test_adapted_parameters_validated():
    with pytest.raises(InvalidParameter):
        pmlf_adapted_policy(1.0, -1, 0.5)
    with pytest.raises(InvalidParameter):
        pmlf_adapted_policy(1.0, 1, 1.5)


def test_adapted_g0_matches_plain():
    rng = np.random.default_rng(12)
    for _ in range(10):
        inst = random_single(rng, n_max=6)
        t1 = simulate(inst, pmlf_policy(1.0), record_decisions=True)
        t2 = simulate(inst, pmlf_adapted_policy(1.0, 0, 0.5), record_decisions=True)
        assert t1.annotations["decisions"] == t2.annotations["decisions"]


def test_adapted_three_job_replay():
    # p=(1,5,5), p_hat=(1,8,2): the repair fires when two jobs remain
    inst = Instance.single([Job(1, 1, 1), Job(2, 5, 8), Job(3, 5, 2)])
    policy = pmlf_adapted_policy(1.0, 1, 0.5)
    trace = simulate(inst, policy)
    assert policy.reset_time == 1.0
    assert trace.completion == {1: 1.0, 2: 10.0, 3: 11.0}


def test_adapted_no_reset_when_all_finish_first():
    # single job: the only settled count check happens at its completion,
    # where zero jobs remain, so the repair never fires
    inst = Instance.single([Job(0, 2, 1)])
    policy = pmlf_adapted_policy(1.0, 1, 0.9)
    simulate(inst, policy)
    assert policy.reset_time is None


def test_adapted_reset_fires_at_threshold_count():
    inst = Instance.single([Job(0, 3, 3), Job(1, 3, 3), Job(2, 9, 1)])
    policy = pmlf_adapted_policy(1.0, 1, 0.5)  # threshold: two jobs left
    simulate(inst, policy)
    assert policy.reset_time is not None


def test_front_job_stable_between_events():
    # decision stream entries change only at events; identical consecutive
    # assignments would indicate churn without cause
    inst = Instance.single([Job(0, 3, 2), Job(1, 4, 1)])
    trace = simulate(inst, pmlf_policy(1.0), record_decisions=True)
    times = [t for t, _ in trace.annotations["decisions"]]
    assert times == sorted(times)
