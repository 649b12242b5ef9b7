"""Proportional-fairness rate solver over the doubly-substochastic polytope.

Maximizes sum_j log(y_j) with y_j = sum_i lam_ij x_ij subject to row and
column sums of x at most one.  Solved by Frank-Wolfe with exact line search;
the linear oracle is a max-weight partial matching on the gradient weights
lam_ij / y_j.  Pairs with lam_ij = 0 are frozen at x = 0 and never enter the
oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _fw
from .errors import InfeasibleJob, InvalidParameter, NonpositiveRate

DEFAULT_TOL = 1e-7
DEFAULT_MAX_ITER = 10_000


@dataclass
class PFRates:
    """Fractional assignment x, induced rates y, and solver diagnostics."""

    jobs: tuple
    x: np.ndarray
    y: np.ndarray
    objective: float
    gap: float
    iterations: int
    converged: bool
    history: np.ndarray | None = None

    def _idx(self, job_id):
        return self.jobs.index(job_id)

    def rate_of(self, job_id) -> float:
        return float(self.y[self._idx(job_id)])

    def x_of(self, job_id) -> np.ndarray:
        return self.x[:, self._idx(job_id)]


@dataclass(frozen=True)
class Matching:
    """Partial machine-job matching: pairs (row, col) plus total weight."""

    pairs: tuple
    value: float


def pf_objective(y) -> float:
    """sum_j log(y_j); raises NonpositiveRate on any y_j <= 0."""
    y = np.asarray(y, dtype=np.float64)
    if y.size and np.min(y) <= 0:
        raise NonpositiveRate(f"rates must be positive, got min {np.min(y)}")
    return float(np.sum(np.log(y)))


def lmo_assignment(weights, lane=None) -> Matching:
    """Max-weight partial matching over the doubly-substochastic vertices.

    Negative (and zero) weight pairs are left unmatched; the polytope is
    downward closed, so skipping them is always optimal.
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 2:
        raise InvalidParameter("weights must be a 2-D matrix")
    if not np.all(np.isfinite(w)):
        raise InvalidParameter("weights must be finite")
    rows, cols = _fw.max_weight_matching(w, lane=lane)
    pairs = tuple((int(r), int(c)) for r, c in zip(rows, cols))
    return Matching(pairs, float(sum(w[r, c] for r, c in pairs)))


def _initial_x(lam):
    m, n = lam.shape
    x = np.where(lam > 0, 1.0 / max(m, n), 0.0)
    rows = x.sum(axis=1)
    x /= np.maximum(rows, 1.0)[:, None]
    cols = x.sum(axis=0)
    x /= np.maximum(cols, 1.0)[None, :]
    return x


def solve_pf(
    rates,
    active=None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    x0=None,
    jobs=None,
    lane=None,
    keep_history: bool = False,
) -> PFRates:
    """Solve the PF program for the active columns of the rate matrix.

    active selects columns by index (all columns when None); jobs optionally
    relabels the selected columns with external ids.  The certified gap bound
    is tol * n_active; if the iteration cap is hit first, the best iterate is
    returned with converged=False.  x0 warm-starts the solve (it is blended
    with the uniform start to keep all rates positive).
    """
    if tol <= 0:
        raise InvalidParameter("tol must be > 0")
    lam_full = np.asarray(rates, dtype=np.float64)
    if lam_full.ndim != 2:
        raise InvalidParameter("rates must be a 2-D matrix")
    if active is None:
        cols = list(range(lam_full.shape[1]))
    else:
        cols = sorted(active)
    if not cols:
        raise InvalidParameter("active job set must be non-empty")
    labels = tuple(jobs) if jobs is not None else tuple(cols)
    if len(labels) != len(cols):
        raise InvalidParameter("jobs labels must match the active column count")
    lam = lam_full[:, cols]
    for k, c in enumerate(cols):
        if not np.any(lam[:, k] > 0):
            raise InfeasibleJob(f"job {labels[k]} has an all-zero rate column")

    x_init = _initial_x(lam)
    if x0 is not None:
        x0 = np.asarray(x0, dtype=np.float64)
        if x0.shape != lam.shape:
            raise InvalidParameter(f"x0 must have shape {lam.shape}")
        warm = np.clip(np.where(lam > 0, x0, 0.0), 0.0, 1.0)
        warm /= np.maximum(warm.sum(axis=1), 1.0)[:, None]
        warm /= np.maximum(warm.sum(axis=0), 1.0)[None, :]
        # blend just enough uniform mass to keep every rate positive
        x_init = (1.0 - 1e-6) * warm + 1e-6 * x_init

    n_active = len(cols)
    x, y, obj, gap, iters, converged, hist = _fw.fw_solve(
        lam, x_init, tol * n_active, max_iter, lane=lane
    )
    np.clip(x, 0.0, 1.0, out=x)
    return PFRates(
        jobs=labels,
        x=x,
        y=y,
        objective=obj,
        gap=gap,
        iterations=iters,
        converged=bool(converged),
        history=hist if keep_history else None,
    )
