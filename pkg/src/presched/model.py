"""Instance and schedule data model.

An Instance bundles jobs (true size, prediction, release, weight) with a
machine-rate matrix lam[i][j]: machine i processes job j at lam[i][j] units
of work per unit time.  A Trace is the validated event log of execution
segments produced by the simulator; every metric is derived from it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameter, InfeasibleJob

SINGLE = "single"
IDENTICAL = "identical"
UNRELATED = "unrelated"

# Absolute tolerance for time/work comparisons (threshold and completion
# crossings).  Relative tolerances are stated where they apply.
EPS = 1e-9


@dataclass(frozen=True)
class Job:
    """One job: true size p, predicted size p_hat, release time r, weight w.

    p_hat is clamped to >= 1 on ingestion; sizes below 1 carry no queue
    information for geometric thresholds.
    """

    id: int
    p: float
    p_hat: float
    r: float = 0.0
    w: float = 1.0

    def __post_init__(self):
        if self.p <= 0:
            raise InvalidParameter(f"job {self.id}: p must be > 0, got {self.p}")
        if self.r < 0:
            raise InvalidParameter(f"job {self.id}: r must be >= 0, got {self.r}")
        if self.w <= 0:
            raise InvalidParameter(f"job {self.id}: w must be > 0, got {self.w}")
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "p_hat", max(1.0, float(self.p_hat)))
        object.__setattr__(self, "r", float(self.r))
        object.__setattr__(self, "w", float(self.w))


class Instance:
    """Jobs plus the machine-rate matrix.

    jobs are kept sorted by id; column j of `rates` belongs to jobs[j].
    environment is one of "single", "identical", "unrelated"; single is
    unrelated with one machine and unit rates, identical has unit rates
    everywhere.
    """

    def __init__(self, jobs, rates, environment=UNRELATED):
        jobs = sorted(jobs, key=lambda j: j.id)
        ids = [j.id for j in jobs]
        if len(set(ids)) != len(ids):
            raise InvalidParameter("job ids must be unique")
        rates = np.asarray(rates, dtype=np.float64)
        if rates.ndim != 2 or rates.shape[1] != len(jobs):
            raise InvalidParameter(
                f"rates must be (m, n) with n = {len(jobs)}, got {rates.shape}"
            )
        if np.any(rates < 0):
            raise InvalidParameter("rates must be non-negative")
        for col, job in enumerate(jobs):
            if not np.any(rates[:, col] > 0):
                raise InfeasibleJob(f"job {job.id} has no machine with positive rate")
        self.jobs = tuple(jobs)
        self.rates = rates
        self.environment = environment
        self._col = {j.id: c for c, j in enumerate(jobs)}

    # -- constructors ------------------------------------------------------

    @classmethod
    def single(cls, jobs):
        return cls(jobs, np.ones((1, len(jobs))), SINGLE)

    @classmethod
    def identical(cls, jobs, m):
        if m < 1:
            raise InvalidParameter("m must be >= 1")
        return cls(jobs, np.ones((m, len(jobs))), IDENTICAL)

    @classmethod
    def unrelated(cls, jobs, rates):
        return cls(jobs, rates, UNRELATED)

    # -- access ------------------------------------------------------------

    @property
    def m(self):
        return self.rates.shape[0]

    @property
    def n(self):
        return len(self.jobs)

    def job(self, job_id) -> Job:
        return self.jobs[self._col[job_id]]

    def col(self, job_id) -> int:
        return self._col[job_id]

    def rate(self, machine, job_id) -> float:
        return float(self.rates[machine, self._col[job_id]])

    def rates_for(self, job_id) -> np.ndarray:
        return self.rates[:, self._col[job_id]]

    def rates_matrix(self, job_ids) -> np.ndarray:
        cols = [self._col[j] for j in job_ids]
        return self.rates[:, cols]

    def with_sizes(self, sizes) -> "Instance":
        """Copy with per-job true sizes replaced (predictions unchanged)."""
        jobs = [
            Job(j.id, sizes[j.id], j.p_hat, j.r, j.w) for j in self.jobs
        ]
        return Instance(jobs, self.rates.copy(), self.environment)


def enforce_underestimates_strict(instance: Instance) -> Instance:
    """Treat each job as active until it received at least p_hat units.

    Returns a copy with p'_j = max(p_j, p_hat_j); predictions unchanged, so
    every prediction is an underestimate of the effective size.
    """
    return instance.with_sizes(
        {j.id: max(j.p, j.p_hat) for j in instance.jobs}
    )


@dataclass(frozen=True)
class Segment:
    """One contiguous run of a job on a machine at the machine's rate."""

    job: int
    machine: int
    t0: float
    t1: float
    rate: float

    def __post_init__(self):
        if not self.t0 < self.t1:
            raise InvalidParameter(f"segment needs t0 < t1, got [{self.t0}, {self.t1}]")
        if self.rate <= 0:
            raise InvalidParameter("segment rate must be > 0")

    @property
    def work(self) -> float:
        return self.rate * (self.t1 - self.t0)


@dataclass
class Trace:
    """Execution log: segments plus the completion time of every job.

    annotations carries policy instrumentation (queue_moves, epoch log,
    decision stream) that has no home in the segment data itself.
    """

    segments: list
    completion: dict
    annotations: dict = field(default_factory=dict)

    def segments_of(self, job_id):
        return sorted(
            (s for s in self.segments if s.job == job_id), key=lambda s: s.t0
        )


@dataclass
class Metrics:
    total_completion: float
    per_job_completion: dict
    preemptions: int
    migrations: int
    queue_moves: int
    D_benchmark: float
    ratio: float | None = None

    def to_dict(self):
        return {
            "total_completion": self.total_completion,
            "per_job_completion": {str(k): v for k, v in self.per_job_completion.items()},
            "preemptions": self.preemptions,
            "migrations": self.migrations,
            "queue_moves": self.queue_moves,
            "d_benchmark": self.D_benchmark,
            "ratio": self.ratio,
        }


# -- JSON formats (documented in docs/formats.md) ---------------------------


def instance_to_dict(instance: Instance) -> dict:
    return {
        "machines": instance.m,
        "environment": instance.environment,
        "jobs": [
            {
                "id": j.id,
                "p": j.p,
                "p_hat": j.p_hat,
                "r": j.r,
                "w": j.w,
                "rates": [float(v) for v in instance.rates_for(j.id)],
            }
            for j in instance.jobs
        ],
    }


def instance_from_dict(data: dict) -> Instance:
    m = int(data["machines"])
    jobs = []
    cols = []
    for spec in data["jobs"]:
        jobs.append(
            Job(
                int(spec["id"]),
                float(spec["p"]),
                float(spec["p_hat"]),
                float(spec.get("r", 0.0)),
                float(spec.get("w", 1.0)),
            )
        )
        row = [float(v) for v in spec["rates"]]
        if len(row) != m:
            raise InvalidParameter(
                f"job {spec['id']}: rates row length {len(row)} != machines {m}"
            )
        cols.append(row)
    order = np.argsort([j.id for j in jobs])
    rates = np.array(cols, dtype=np.float64).T[:, order]
    jobs = [jobs[i] for i in order]
    return Instance(jobs, rates, data.get("environment", UNRELATED))


def save_instance(instance: Instance, path):
    with open(path, "w") as fh:
        json.dump(instance_to_dict(instance), fh, indent=2)
        fh.write("\n")


def load_instance(path) -> Instance:
    with open(path) as fh:
        return instance_from_dict(json.load(fh))


def trace_to_dict(trace: Trace) -> dict:
    return {
        "segments": [
            {"job": s.job, "machine": s.machine, "t0": s.t0, "t1": s.t1, "rate": s.rate}
            for s in trace.segments
        ],
        "completion": {str(k): v for k, v in trace.completion.items()},
    }


def trace_from_dict(data: dict) -> Trace:
    segments = [
        Segment(int(s["job"]), int(s["machine"]), float(s["t0"]), float(s["t1"]), float(s["rate"]))
        for s in data["segments"]
    ]
    completion = {int(k): float(v) for k, v in data["completion"].items()}
    return Trace(segments, completion)


def save_trace(trace: Trace, path):
    with open(path, "w") as fh:
        json.dump(trace_to_dict(trace), fh, indent=2)
        fh.write("\n")


def load_trace(path) -> Trace:
    with open(path) as fh:
        return trace_from_dict(json.load(fh))
