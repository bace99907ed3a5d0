"""Flat norm of discrete signed measures.

The flat norm is the supremum of sum_i w_i f(x_i) over test functions
with |f| <= 1 and Lipschitz constant at most 1.  On a finite support this
is a linear program in the values f_i = f(x_i): box constraints
|f_i| <= 1 plus pairwise constraints |f_i - f_j| <= d(x_i, x_j).  Pairs
with d(x_i, x_j) >= 2 are dropped since the box constraints dominate.

Two exact routes are implemented:

* ``fm_norm`` is the production path.  In one Euclidean dimension the
  pairwise constraints reduce to consecutive atoms (sorted), and the LP
  is solved by an exact dynamic program over piecewise-linear concave
  value functions.  In every other case a dense primal simplex with
  Bland's rule runs on a working constraint set that grows by violated
  pairs until none remain.  Both routes are deterministic.

* ``fm_norm_oracle`` solves the identical LP for small supports through
  an unrelated implementation (scipy's HiGHS solver) and exists purely
  to cross-check ``fm_norm``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .geometry import EUCLIDEAN, pairwise_distances
from .measures import DiscreteSignedMeasure, coalesce, linear_combine

# Pairwise constraints farther apart than this are implied by the box.
_PRUNE_AT = 2.0
_FEAS_TOL = 1e-10
_PIVOT_TOL = 1e-11
_MAX_SIMPLEX_ITERS = 200_000
_MAX_GENERATION_ROUNDS = 200

STATUS_OPTIMAL = "optimal"
STATUS_NUMERICS = "infeasible_numerics"


class FlatNormError(RuntimeError):
    """Raised when the LP solve cannot certify an optimal value."""


@dataclass(frozen=True)
class FlatNormResult:
    value: float
    optimal_f_values: np.ndarray  # aligned with the measure's atom order
    status: str


def fm_norm(mu: DiscreteSignedMeasure) -> FlatNormResult:
    """Flat norm of a coalesced measure, with an optimal test vector."""
    n = mu.num_atoms
    if n == 0:
        return FlatNormResult(0.0, np.zeros(0), STATUS_OPTIMAL)
    w = np.asarray(mu.weights, dtype=float)
    if n == 1:
        f = np.array([1.0 if w[0] >= 0 else -1.0])
        return FlatNormResult(abs(float(w[0])), f, STATUS_OPTIMAL)
    if mu.dim == 1 and mu.domain == EUCLIDEAN:
        value, f = _fm_chain_1d(mu.points[:, 0], w)
        return FlatNormResult(value, f, STATUS_OPTIMAL)
    return _fm_simplex(mu)


def fm_distance(mu: DiscreteSignedMeasure, nu: DiscreteSignedMeasure) -> float:
    """Flat distance ||mu - nu||; raises FlatNormError if not certified."""
    result = fm_norm(linear_combine(1.0, mu, -1.0, nu))
    if result.status != STATUS_OPTIMAL:
        raise FlatNormError(f"flat norm solve failed with status {result.status}")
    return result.value


def fm_norm_oracle(mu: DiscreteSignedMeasure) -> float:
    """Independent LP solve (scipy HiGHS) for supports of at most 8 atoms."""
    n = mu.num_atoms
    if n > 8:
        raise ValueError(f"oracle accepts at most 8 atoms, got {n}")
    if n == 0:
        return 0.0
    w = np.asarray(mu.weights, dtype=float)
    if n == 1:
        return abs(float(w[0]))
    dist = pairwise_distances(mu.points, mu.domain)
    rows = []
    rhs = []
    for i in range(n):
        for j in range(i + 1, n):
            row = np.zeros(n)
            row[i], row[j] = 1.0, -1.0
            rows.append(row.copy())
            rhs.append(dist[i, j])
            row[i], row[j] = -1.0, 1.0
            rows.append(row)
            rhs.append(dist[i, j])
    res = scipy.optimize.linprog(
        c=-w,
        A_ub=np.array(rows),
        b_ub=np.array(rhs),
        bounds=[(-1.0, 1.0)] * n,
        method="highs",
    )
    if res.status != 0:
        raise FlatNormError(f"oracle LP failed: {res.message}")
    return float(-res.fun)


# ---------------------------------------------------------------------------
# Route 1: exact chain dynamic program, one Euclidean dimension.
#
# Sorted atoms x_1 < ... < x_n only need the consecutive constraints
# |f_{i+1} - f_i| <= x_{i+1} - x_i: any other pair follows by summing.
# Backward value functions V_i(f) = max of the objective tail given
# f_i = f are concave piecewise-linear; each step is a sliding-window
# maximum, a clamp to [-1, 1] and the addition of the linear term w_i f.
# ---------------------------------------------------------------------------

def _window_max(breaks: np.ndarray, vals: np.ndarray, delta: float):
    i_star = int(np.argmax(vals))
    vmax = vals[i_star]
    j_star = i_star
    while j_star + 1 < len(vals) and vals[j_star + 1] == vmax:
        j_star += 1
    new_breaks = np.concatenate([breaks[: i_star + 1] - delta, breaks[j_star:] + delta])
    new_vals = np.concatenate([vals[: i_star + 1], vals[j_star:]])
    return new_breaks, new_vals


def _clamp(breaks: np.ndarray, vals: np.ndarray, lo: float, hi: float):
    lo_val = float(np.interp(lo, breaks, vals))
    hi_val = float(np.interp(hi, breaks, vals))
    keep = (breaks > lo) & (breaks < hi)
    new_breaks = np.concatenate([[lo], breaks[keep], [hi]])
    new_vals = np.concatenate([[lo_val], vals[keep], [hi_val]])
    return new_breaks, new_vals


def _fm_chain_1d(points: np.ndarray, weights: np.ndarray):
    order = np.argsort(points, kind="stable")
    x = points[order]
    w = weights[order]
    n = x.shape[0]
    gaps = np.diff(x)
    breaks = np.array([-1.0, 1.0])
    vals = w[n - 1] * breaks
    levels = [(breaks, vals)]
    for i in range(n - 2, -1, -1):
        breaks, vals = _window_max(breaks, vals, float(gaps[i]))
        breaks, vals = _clamp(breaks, vals, -1.0, 1.0)
        vals = vals + w[i] * breaks
        levels.append((breaks, vals))
    top_breaks, top_vals = levels[-1]
    k_star = int(np.argmax(top_vals))
    value = float(top_vals[k_star])
    f_sorted = np.zeros(n)
    f_sorted[0] = float(top_breaks[k_star])
    for i in range(n - 1):
        br, vl = levels[n - 2 - i]
        anchor = float(br[int(np.argmax(vl))])
        lo = f_sorted[i] - float(gaps[i])
        hi = f_sorted[i] + float(gaps[i])
        f_sorted[i + 1] = min(max(anchor, lo), hi)
    f = np.zeros(n)
    f[order] = f_sorted
    return value, f


# ---------------------------------------------------------------------------
# Route 2: dense primal simplex with Bland's rule and constraint generation.
#
# Shifted variables g_i = f_i + 1 in [0, 2] give a feasible slack start.
# Rows: g_i <= 2 for every atom plus, for every working pair, the two
# directed constraints g_i - g_j <= d_ij.  The working set starts from
# nearest neighbours (all pairs when the support is small) and grows by
# the most-violated pairs until the full constraint set is satisfied.
# ---------------------------------------------------------------------------

def _simplex_max(c: np.ndarray, A: np.ndarray, b: np.ndarray):
    """Maximize c.x subject to A x <= b, x >= 0, with b >= 0 (slack start)."""
    m, n = A.shape
    tableau = np.zeros((m + 1, n + m + 1))
    tableau[:m, :n] = A
    tableau[:m, n : n + m] = np.eye(m)
    tableau[:m, -1] = b
    tableau[m, :n] = -c
    basis = np.arange(n, n + m)
    for _ in range(_MAX_SIMPLEX_ITERS):
        reduced = tableau[m, : n + m]
        candidates = np.nonzero(reduced < -_PIVOT_TOL)[0]
        if candidates.size == 0:
            x = np.zeros(n + m)
            x[basis] = tableau[:m, -1]
            return x[:n], float(tableau[m, -1]), STATUS_OPTIMAL
        col = int(candidates[0])  # Bland: smallest eligible index
        column = tableau[:m, col]
        rows = np.nonzero(column > _PIVOT_TOL)[0]
        if rows.size == 0:
            return None, 0.0, STATUS_NUMERICS  # unbounded: cannot happen, boxed
        ratios = tableau[rows, -1] / column[rows]
        best = np.min(ratios)
        tied = rows[ratios <= best + 1e-30]
        row = int(tied[np.argmin(basis[tied])])  # Bland: smallest basis index
        pivot = tableau[row, col]
        tableau[row] /= pivot
        factors = tableau[:, col].copy()
        factors[row] = 0.0
        tableau -= np.outer(factors, tableau[row])
        basis[row] = col
    return None, 0.0, STATUS_NUMERICS


def _initial_pairs(dist: np.ndarray, live: np.ndarray) -> set[tuple[int, int]]:
    n = dist.shape[0]
    if n <= 12:
        return {(i, j) for i in range(n) for j in range(i + 1, n) if live[i, j]}
    pairs: set[tuple[int, int]] = set()
    k = min(3, n - 1)
    for i in range(n):
        order = np.argsort(dist[i], kind="stable")
        added = 0
        for j in order:
            if added >= k:
                break
            if j == i:
                continue
            a, b = min(i, int(j)), max(i, int(j))
            if live[a, b]:
                pairs.add((a, b))
                added += 1
    return pairs


def _fm_simplex(mu: DiscreteSignedMeasure) -> FlatNormResult:
    n = mu.num_atoms
    w = np.asarray(mu.weights, dtype=float)
    dist = pairwise_distances(mu.points, mu.domain)
    live = np.triu(dist < _PRUNE_AT - 1e-12, k=1)
    working = _initial_pairs(dist, live)
    f = np.sign(w)
    f[f == 0.0] = 1.0
    status = STATUS_OPTIMAL
    for _ in range(_MAX_GENERATION_ROUNDS):
        pair_list = sorted(working)
        m = n + 2 * len(pair_list)
        A = np.zeros((m, n))
        b = np.zeros(m)
        A[:n] = np.eye(n)
        b[:n] = 2.0
        for k, (i, j) in enumerate(pair_list):
            r = n + 2 * k
            A[r, i], A[r, j] = 1.0, -1.0
            b[r] = dist[i, j]
            A[r + 1, i], A[r + 1, j] = -1.0, 1.0
            b[r + 1] = dist[i, j]
        g, _, status = _simplex_max(w, A, b)
        if status != STATUS_OPTIMAL:
            break
        f = g - 1.0
        gap = np.abs(f[:, None] - f[None, :]) - dist
        gap[~live] = -np.inf
        viol_idx = np.argwhere(gap > _FEAS_TOL)
        new_pairs = [
            (int(i), int(j))
            for i, j in viol_idx
            if (int(i), int(j)) not in working
        ]
        if not new_pairs:
            value = float(np.dot(w, f))
            return FlatNormResult(value, f, STATUS_OPTIMAL)
        new_pairs.sort(key=lambda ij: (-gap[ij[0], ij[1]], ij))
        working.update(new_pairs[: max(64, 4 * n)])
    return FlatNormResult(float(np.dot(w, f)), f, STATUS_NUMERICS)
