import math

import numpy as np
import pytest

from presched.bench import (
    CSV_HEADER,
    GenConfig,
    SweepConfig,
    apply_predictions,
    gen_instance,
    gen_predictions,
    make_policy,
    run_sweep,
    run_sweep_parallel,
    write_csv,
)
from presched.errors import InvalidConfig, InvalidR
from presched.model import instance_to_dict


def test_gen_config_validation():
    with pytest.raises(InvalidConfig):
        GenConfig(m=0)
    with pytest.raises(InvalidConfig):
        GenConfig(special_job_frac=1.5)
    with pytest.raises(InvalidConfig):
        GenConfig(special_machine_count=11)
    with pytest.raises(InvalidConfig):
        GenConfig(R=0.5)
    with pytest.raises(InvalidConfig):
        GenConfig(special_job_frac=0.2, special_machine_count=0)


def test_gen_zero_special_gives_identical_rates():
    inst = gen_instance(GenConfig(m=4, n=12, special_job_frac=0.0, seed=1))
    assert np.all(inst.rates == 1.0)


def test_gen_deterministic():
    cfg = GenConfig(m=10, n=100, special_job_frac=0.2, special_machine_count=2, seed=5)
    a = instance_to_dict(gen_instance(cfg))
    b = instance_to_dict(gen_instance(cfg))
    assert a == b


def test_gen_special_rows_have_exactly_two_machines():
    cfg = GenConfig(m=10, n=50, special_job_frac=0.2, special_machine_count=2, seed=9)
    inst = gen_instance(cfg)
    special = [j for j in inst.jobs if (inst.rates_for(j.id) == 0).any()]
    assert len(special) == 10
    for job in special:
        assert int((inst.rates_for(job.id) > 0).sum()) == 2
        assert 1 <= job.p <= 200
    regular = [j for j in inst.jobs if not (inst.rates_for(j.id) == 0).any()]
    for job in regular:
        assert 1 <= job.p <= 10


def test_gen_shared_special_machines_flag():
    cfg = GenConfig(
        m=10, n=50, special_job_frac=0.2, special_machine_count=2, seed=9,
        per_job_special_machines=False,
    )
    inst = gen_instance(cfg)
    for job in inst.jobs:
        rates = inst.rates_for(job.id)
        if (rates == 0).any():
            assert rates[0] == 1.0 and rates[1] == 1.0


def test_predictions_bounds_and_determinism():
    inst = gen_instance(GenConfig(m=4, n=40, seed=3))
    p1 = gen_predictions(inst, 16.0, 7)
    p2 = gen_predictions(inst, 16.0, 7)
    assert p1 == p2
    for job in inst.jobs:
        assert 1.0 <= p1[job.id] <= job.p
    exact = gen_predictions(inst, 1.0, 7)
    assert all(exact[j.id] == j.p for j in inst.jobs)
    with pytest.raises(InvalidR):
        gen_predictions(inst, 0.9, 7)


def test_prediction_ceiling_arithmetic():
    # p=10, xi=4 -> ceil(10/4) = 3
    assert math.ceil(10 / 4) == 3


def test_make_policy_names():
    for name in ("snap", "snap-greedy", "snap-2stage", "blind", "doubling",
                 "pmlf", "pmlf-adapted", "rr", "hybrid:4"):
        make_policy(name, m=2)
    hybrid = make_policy("hybrid:6.5")
    assert hybrid.c == 6.5
    with pytest.raises(InvalidConfig):
        make_policy("nope")


def small_sweep_config(**kw):
    base = GenConfig(m=2, n=8, special_job_frac=0.25, special_machine_count=1, seed=11)
    defaults = dict(
        axis="R",
        values=(1.0, 4.0),
        algorithms=("blind", "snap"),
        trials=2,
        base=base,
        pf_tol=1e-4,
        pf_max_iter=500,
    )
    defaults.update(kw)
    return SweepConfig(**defaults)


def test_sweep_config_validation():
    with pytest.raises(InvalidConfig):
        small_sweep_config(axis="bogus")
    with pytest.raises(InvalidConfig):
        small_sweep_config(values=())
    with pytest.raises(InvalidConfig):
        small_sweep_config(trials=0)


def test_sweep_row_count_and_order():
    cfg = small_sweep_config()
    rows = run_sweep(cfg)
    assert len(rows) == 2 * 2 * 2
    keys = [(r.axis_value, r.algorithm, r.seed) for r in rows]
    assert keys == sorted(keys, key=lambda k: (k[0], cfg.algorithms.index(k[1]), k[2]))
    for row in rows:
        assert row.error is None
        assert row.ratio >= 1 - 1e-6


def test_sweep_blind_rows_zero_preemptions():
    rows = run_sweep(small_sweep_config(algorithms=("blind",)))
    assert all(r.preempt_per_job == 0.0 for r in rows)


def test_sweep_reproducible_csv(tmp_path):
    cfg = small_sweep_config()
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_csv(run_sweep(cfg), p1)
    write_csv(run_sweep(cfg), p2)

    def strip_runtime(path):
        lines = path.read_text().splitlines()
        idx = lines[0].split(",").index("runtime_ms")
        return [",".join(col for i, col in enumerate(l.split(",")) if i != idx) for l in lines]

    assert strip_runtime(p1) == strip_runtime(p2)
    assert p1.read_text().splitlines()[0] == CSV_HEADER


def test_sweep_axes():
    for axis, values in (
        ("beta", (0.5, 0.9)),
        ("delta", (0.5, 2.0)),
        ("special_frac", (0.0, 0.25)),
        ("hybrid_c", (1.0, 4.0)),
    ):
        algorithms = ("hybrid:4",) if axis == "hybrid_c" else ("snap",)
        cfg = small_sweep_config(axis=axis, values=values, algorithms=algorithms, trials=1)
        rows = run_sweep(cfg)
        assert len(rows) == len(values)
        assert all(r.error is None for r in rows), [r.error for r in rows]


def test_sweep_error_rows_do_not_abort():
    # rr rejects the unrelated environment -> error rows, sweep completes
    cfg = small_sweep_config(algorithms=("rr", "blind"), values=(1.0,), trials=1)
    rows = run_sweep(cfg)
    assert len(rows) == 2
    assert rows[0].error is not None and math.isnan(rows[0].total)
    assert rows[1].error is None


def test_sweep_parallel_matches_sequential():
    cfg = small_sweep_config()
    seq = [r.csv() for r in run_sweep(cfg)]
    par = [r.csv() for r in run_sweep_parallel(cfg, jobs=2)]

    def drop_runtime(row):
        cols = row.split(",")
        return cols[:-1]

    assert [drop_runtime(r) for r in seq] == [drop_runtime(r) for r in par]


def test_sweep_inline_bound_checks_run():
    # underestimated predictions: the SNAP budget assertion must hold
    cfg = small_sweep_config(values=(8.0,), algorithms=("snap",), trials=3)
    rows = run_sweep(cfg)
    assert all(r.error is None for r in rows)


def test_apply_predictions_round_trip():
    inst = gen_instance(GenConfig(m=2, n=6, seed=2))
    preds = gen_predictions(inst, 8.0, 5)
    updated = apply_predictions(inst, preds)
    for job in updated.jobs:
        assert job.p_hat == preds[job.id]
        assert job.p == inst.job(job.id).p
