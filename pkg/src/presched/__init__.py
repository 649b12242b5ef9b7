"""Prediction-aware scheduling laboratory.

Low-preemption scheduling policies driven by job-size predictions, a
non-clairvoyant simulation driver, exact optima for normalization, and a
benchmark harness.
"""

from .model import (
    Instance,
    Job,
    Metrics,
    Segment,
    Trace,
    enforce_underestimates_strict,
    instance_from_dict,
    instance_to_dict,
    load_instance,
    load_trace,
    save_instance,
    save_trace,
)
from .sim import Decision, Event, Policy, SimView, simulate
from .validate import ValidationReport, validate_trace
from .metrics import compute_metrics, d_benchmark
from .pfrates import PFRates, lmo_assignment, pf_objective, solve_pf
from .pmlf import pmlf_adapted_policy, pmlf_identical_policy, pmlf_policy
from .snap import (
    EpochPlan,
    hybrid_snap_policy,
    next_checkpoint_gap,
    plan_epoch,
    snap_policy,
    snap_two_stage_policy,
)
from .baselines import (
    MachineQueue,
    blind_policy,
    dispatch_min_increase,
    doubling_policy,
    residual_estimate,
    round_robin_policy,
)
from .optimum import (
    brute_force_opt,
    min_cost_assignment,
    opt_single_machine,
    opt_unrelated_matching,
    srpt_lower_bound,
)
from .malleable import (
    MalleablePlan,
    SpeedupFunction,
    round_malleable_identical,
    speedup_eval,
)
from .bench import (
    GenConfig,
    SweepConfig,
    gen_instance,
    gen_predictions,
    run_sweep,
    write_csv,
)

__version__ = "0.1.0"
