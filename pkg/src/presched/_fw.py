"""Pairwise Frank-Wolfe kernels for the proportional-fairness program.

Two interchangeable lanes compute the same iteration: a numba @njit kernel
(default) and a pure numpy/scipy path.  Set PRESCHED_PURE_NUMPY=1 to force
the numpy lane; it is also used automatically when numba is unavailable.
benchmarks/bench_kernels.py compares the two.

The linear oracle over the doubly-substochastic polytope is a max-weight
partial matching; the numba lane carries its own rectangular Hungarian
solver, the numpy lane delegates to scipy.optimize.linear_sum_assignment.
Each iteration moves weight from the worst active atom to the oracle's
matching (pairwise step) with an exact line search on the one-dimensional
concave restriction, which restores linear convergence where plain
Frank-Wolfe zigzags.  The iterate is kept as a convex combination of one
dense "aggregate" atom (the start point, or the whole iterate after an
atom-store overflow) and up to _MAX_ATOMS matching atoms.
"""

from __future__ import annotations

import os

import numpy as np
from scipy.optimize import linear_sum_assignment

_FORCE_NUMPY = os.environ.get("PRESCHED_PURE_NUMPY", "").strip() not in ("", "0")

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dep, but stay usable
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


ACTIVE_LANE = "numpy" if (_FORCE_NUMPY or not HAS_NUMBA) else "numba"

_LINE_SEARCH_STEPS = 64
_MAX_ATOMS = 512


@njit(cache=True)
def _hungarian_min_rect(a):
    """Min-cost assignment matching every row; requires rows <= cols.

    Potential-based O(rows^2 * cols); returns row -> col indices.
    """
    n, m = a.shape
    inf = 1e30
    u = np.zeros(n + 1)
    v = np.zeros(m + 1)
    match = np.zeros(m + 1, dtype=np.int64)  # col -> row (1-based, 0 = free)
    way = np.zeros(m + 1, dtype=np.int64)
    for i in range(1, n + 1):
        match[0] = i
        j0 = 0
        minv = np.full(m + 1, inf)
        used = np.zeros(m + 1, dtype=np.bool_)
        while True:
            used[j0] = True
            i0 = match[j0]
            delta = inf
            j1 = 0
            for j in range(1, m + 1):
                if not used[j]:
                    cur = a[i0 - 1, j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(m + 1):
                if used[j]:
                    u[match[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        while j0 != 0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1
    row_to_col = -np.ones(n, dtype=np.int64)
    for j in range(1, m + 1):
        if match[j] > 0:
            row_to_col[match[j] - 1] = j - 1
    return row_to_col


@njit(cache=True)
def _oracle_numba(w):
    """Max-weight matching as col-per-machine (-1 = unmatched)."""
    m, n = w.shape
    sel = -np.ones(m, dtype=np.int64)
    if m <= n:
        r2c = _hungarian_min_rect(-w)
        for i in range(m):
            j = r2c[i]
            if j >= 0 and w[i, j] > 0:
                sel[i] = j
    else:
        c2r = _hungarian_min_rect(-w.T.copy())
        for j in range(n):
            i = c2r[j]
            if i >= 0 and w[i, j] > 0:
                sel[i] = j
    return sel


def _oracle_numpy(w):
    rows, cols = linear_sum_assignment(w, maximize=True)
    sel = -np.ones(w.shape[0], dtype=np.int64)
    for i, j in zip(rows, cols):
        if w[i, j] > 0:
            sel[i] = j
    return sel


@njit(cache=True)
def _search_step(y, d, hi):
    """Maximize sum(log(y + g*d)) for g in [0, hi]; exact up to bisection."""
    n = y.shape[0]
    for j in range(n):
        if d[j] < 0.0:
            cap = -y[j] / d[j]
            if cap <= hi:
                hi = cap * (1.0 - 1e-12)
    if hi <= 0.0:
        return 0.0
    dhi = 0.0
    for j in range(n):
        den = y[j] + hi * d[j]
        if den < 1e-300:
            den = 1e-300
        dhi += d[j] / den
    if dhi >= 0.0:
        return hi
    lo = 0.0
    top = hi
    for _ in range(_LINE_SEARCH_STEPS):
        mid = 0.5 * (lo + top)
        dm = 0.0
        for j in range(n):
            den = y[j] + mid * d[j]
            if den < 1e-300:
                den = 1e-300
            dm += d[j] / den
        if dm > 0.0:
            lo = mid
        else:
            top = mid
    return 0.5 * (lo + top)


@njit(cache=True)
def _fw_loop_numba(lam, x, tol_total, max_iter):
    m, n = lam.shape
    y = np.zeros(n)
    for j in range(n):
        acc = 0.0
        for i in range(m):
            acc += lam[i, j] * x[i, j]
        y[j] = acc

    # Atom store: dense_x is a unit atom (point of the polytope) carrying
    # weight dense_alpha; matching atoms carry weights alpha[t].
    atoms = -np.ones((_MAX_ATOMS, m), dtype=np.int64)
    alpha = np.zeros(_MAX_ATOMS)
    n_atoms = 0
    dense_x = x.copy()
    dense_y = y.copy()
    dense_alpha = 1.0

    obj = 0.0
    for j in range(n):
        obj += np.log(y[j])
    obj_hist = np.empty(max_iter + 1)
    obj_hist[0] = obj
    w = np.zeros((m, n))
    ys = np.zeros(n)
    ya = np.zeros(n)
    d = np.zeros(n)
    gap = 1e300
    it = 0
    converged = False

    while it < max_iter:
        it += 1
        wx = 0.0
        for j in range(n):
            inv = 1.0 / y[j]
            for i in range(m):
                w[i, j] = lam[i, j] * inv
                wx += w[i, j] * x[i, j]
        sel = _oracle_numba(w)
        ws = 0.0
        for i in range(m):
            if sel[i] >= 0:
                ws += w[i, sel[i]]
        gap = ws - wx
        if gap <= tol_total:
            converged = True
            it -= 1
            break

        # Away atom: lowest gradient score among active atoms.
        away = -2
        worst = 1e300
        if dense_alpha > 0.0:
            sc = 0.0
            for j in range(n):
                sc += dense_y[j] / y[j]
            worst = sc
            away = -1
        for t in range(n_atoms):
            sc = 0.0
            for i in range(m):
                if atoms[t, i] >= 0:
                    sc += w[i, atoms[t, i]]
            if alpha[t] > 0.0 and sc < worst:
                worst = sc
                away = t

        for j in range(n):
            ys[j] = 0.0
        for i in range(m):
            if sel[i] >= 0:
                ys[sel[i]] += lam[i, sel[i]]
        if away == -1:
            cap = dense_alpha
            for j in range(n):
                ya[j] = dense_y[j]
        else:
            cap = alpha[away]
            for j in range(n):
                ya[j] = 0.0
            for i in range(m):
                if atoms[away, i] >= 0:
                    ya[atoms[away, i]] += lam[i, atoms[away, i]]
        for j in range(n):
            d[j] = ys[j] - ya[j]
        g = _search_step(y, d, cap)
        if g <= 0.0:
            it -= 1
            break

        # x <- x + g * (s - a)
        if away == -1:
            for i in range(m):
                for j in range(n):
                    x[i, j] -= g * dense_x[i, j]
            dense_alpha -= g
            if dense_alpha < 1e-14:
                dense_alpha = 0.0
        else:
            for i in range(m):
                if atoms[away, i] >= 0:
                    x[i, atoms[away, i]] -= g
            alpha[away] -= g
            if alpha[away] < 1e-14:
                n_atoms -= 1
                for i in range(m):
                    atoms[away, i] = atoms[n_atoms, i]
                alpha[away] = alpha[n_atoms]
        for i in range(m):
            if sel[i] >= 0:
                x[i, sel[i]] += g
                if x[i, sel[i]] > 1.0:
                    x[i, sel[i]] = 1.0

        # register s in the atom store
        found = -1
        for t in range(n_atoms):
            same = True
            for i in range(m):
                if atoms[t, i] != sel[i]:
                    same = False
                    break
            if same:
                found = t
                break
        if found >= 0:
            alpha[found] += g
        elif n_atoms < _MAX_ATOMS:
            for i in range(m):
                atoms[n_atoms, i] = sel[i]
            alpha[n_atoms] = g
            n_atoms += 1
        else:
            # overflow: collapse the whole iterate into the dense atom
            for i in range(m):
                for j in range(n):
                    dense_x[i, j] = x[i, j]
            dense_alpha = 1.0
            n_atoms = 0
            for j in range(n):
                acc = 0.0
                for i in range(m):
                    acc += lam[i, j] * dense_x[i, j]
                dense_y[j] = acc

        for j in range(n):
            acc = 0.0
            for i in range(m):
                acc += lam[i, j] * x[i, j]
            y[j] = acc if acc > 1e-300 else 1e-300
        obj = 0.0
        for j in range(n):
            obj += np.log(y[j])
        obj_hist[it] = obj
    return x, y, obj, gap, it, converged, obj_hist[: it + 1]


def _fw_loop_numpy(lam, x, tol_total, max_iter):
    m, n = lam.shape
    y = np.einsum("ij,ij->j", lam, x)
    dense_x = x.copy()
    dense_y = y.copy()
    dense_alpha = 1.0
    atoms = {}  # tuple(col per machine) -> weight
    obj_hist = [float(np.sum(np.log(y)))]
    gap = np.inf
    it = 0
    converged = False
    midx = np.arange(m)

    def atom_rates(sel):
        ys = np.zeros(n)
        keep = sel >= 0
        np.add.at(ys, sel[keep], lam[midx[keep], sel[keep]])
        return ys

    while it < max_iter:
        it += 1
        w = lam / y[None, :]
        wx = float(np.sum(w * x))
        sel = _oracle_numpy(w)
        keep = sel >= 0
        ws = float(np.sum(w[midx[keep], sel[keep]]))
        gap = ws - wx
        if gap <= tol_total:
            converged = True
            it -= 1
            break

        away_key = None  # None = dense aggregate
        away_score = np.inf
        if dense_alpha > 0:
            away_score = float(np.sum(dense_y / y))
        for key, weight in atoms.items():
            if weight <= 0:
                continue
            ksel = np.array(key)
            kkeep = ksel >= 0
            sc = float(np.sum(w[midx[kkeep], ksel[kkeep]]))
            if sc < away_score:
                away_score = sc
                away_key = key

        ys = atom_rates(sel)
        if away_key is None:
            cap = dense_alpha
            ya = dense_y
        else:
            cap = atoms[away_key]
            ya = atom_rates(np.array(away_key))
        d = ys - ya
        neg = d < 0
        hi = cap
        if np.any(neg):
            cap_feas = float(np.min(-y[neg] / d[neg]))
            if cap_feas <= hi:
                hi = cap_feas * (1.0 - 1e-12)
        if hi <= 0:
            it -= 1
            break

        def dphi(g):
            return float(np.sum(d / np.maximum(y + g * d, 1e-300)))

        if dphi(hi) >= 0:
            g = hi
        else:
            lo = 0.0
            top = hi
            for _ in range(_LINE_SEARCH_STEPS):
                mid = 0.5 * (lo + top)
                if dphi(mid) > 0:
                    lo = mid
                else:
                    top = mid
            g = 0.5 * (lo + top)
        if g <= 0:
            it -= 1
            break

        if away_key is None:
            x -= g * dense_x
            dense_alpha -= g
            if dense_alpha < 1e-14:
                dense_alpha = 0.0
        else:
            asel = np.array(away_key)
            akeep = asel >= 0
            x[midx[akeep], asel[akeep]] -= g
            atoms[away_key] -= g
            if atoms[away_key] < 1e-14:
                del atoms[away_key]
        x[midx[keep], sel[keep]] += g
        np.clip(x, 0.0, 1.0, out=x)
        key = tuple(int(v) for v in sel)
        if key in atoms:
            atoms[key] += g
        elif len(atoms) < _MAX_ATOMS:
            atoms[key] = g
        else:
            dense_x = x.copy()
            dense_y = np.einsum("ij,ij->j", lam, dense_x)
            dense_alpha = 1.0
            atoms.clear()
        y = np.maximum(np.einsum("ij,ij->j", lam, x), 1e-300)
        obj_hist.append(float(np.sum(np.log(y))))
    obj = float(np.sum(np.log(y)))
    return x, y, obj, float(gap), it, converged, np.array(obj_hist)


def fw_solve(lam, x0, tol_total, max_iter, lane=None):
    """Run the pairwise Frank-Wolfe loop on the selected lane.

    lam: (m, n) non-negative rates; x0: feasible start with positive column
    rates.  Returns (x, y, objective, gap, iterations, converged, history).
    """
    lane = lane or ACTIVE_LANE
    lam = np.ascontiguousarray(lam, dtype=np.float64)
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    if lane == "numba" and HAS_NUMBA:
        return _fw_loop_numba(lam, x0, float(tol_total), int(max_iter))
    return _fw_loop_numpy(lam, x0, float(tol_total), int(max_iter))


def max_weight_matching(w, lane=None):
    """Max-weight partial matching rows<->cols; non-positive pairs unmatched.

    Weights are clamped at zero before the assignment so that skipping a
    negative pair is never worse than matching it.
    """
    lane = lane or ACTIVE_LANE
    w = np.maximum(np.ascontiguousarray(w, dtype=np.float64), 0.0)
    if lane == "numba" and HAS_NUMBA:
        sel = _oracle_numba(w)
    else:
        sel = _oracle_numpy(w)
    rows = np.nonzero(sel >= 0)[0]
    return rows, sel[rows]
