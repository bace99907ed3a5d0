"""Finitely supported signed measures and bounded Lipschitz test functions.

A measure is a finite list of weighted atoms in dimension d <= 3, either
on Euclidean space or on the unit torus.  All other modules build on the
operations here: total variation, linear combination, multiplication by
a scalar function, Hahn-Jordan splitting and atom coalescing.

Atoms are stored as a (n, d) coordinate array plus a (n,) weight array.
Measures returned by the constructors in this module are canonical:
torus coordinates wrapped to [0, 1), atoms within ``COALESCE_EPS`` of
each other merged, weights below ``WEIGHT_EPS`` dropped, and atoms
sorted lexicographically by coordinates.  The canonical form makes
equality checks and downstream optimisation deterministic.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .geometry import (
    EUCLIDEAN,
    TORUS,
    distance,
    validate_dim,
    validate_domain,
    wrap_torus,
)

# Atoms closer than this merge into one; weights smaller than this are dropped.
COALESCE_EPS = 1e-12
WEIGHT_EPS = 1e-15


class MeasureError(ValueError):
    """Raised when measure inputs violate a documented precondition."""


@dataclass(frozen=True)
class DiscreteSignedMeasure:
    """Finitely supported signed measure: weighted atoms on a fixed domain."""

    points: np.ndarray
    weights: np.ndarray
    domain: str = EUCLIDEAN

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def num_atoms(self) -> int:
        return self.points.shape[0]

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.weights))

    def is_positive(self, tol: float = WEIGHT_EPS) -> bool:
        if self.num_atoms == 0:
            return True
        return bool(np.min(self.weights) >= -tol)


@dataclass(frozen=True)
class BoundedLipschitzFunction:
    """Scalar test function with explicit sup and Lipschitz bounds.

    ``evaluate`` maps a (n, d) array of points to a (n,) array of values.
    The bounds are caller-supplied certificates, not estimates: callers
    must guarantee |f| <= sup_bound everywhere and Lip(f) <= lip_bound
    for the metric of the domain the function is used on.
    """

    evaluate: Callable[[np.ndarray], np.ndarray]
    sup_bound: float
    lip_bound: float
    name: str = ""

    @property
    def fm_bound(self) -> float:
        """Norm max(sup_bound, lip_bound) used in the product inequality."""
        return max(self.sup_bound, self.lip_bound)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(self.evaluate(np.asarray(points, dtype=float)), dtype=float)


def constant_function(value: float) -> BoundedLipschitzFunction:
    v = float(value)
    return BoundedLipschitzFunction(
        evaluate=lambda pts: np.full(pts.shape[0], v),
        sup_bound=abs(v),
        lip_bound=0.0,
        name=f"const({v})",
    )


def _as_point_array(points: Sequence | np.ndarray, dim_hint: int | None = None) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        # Either a list of 1d coordinates or a single point; treat as column.
        arr = arr.reshape(-1, 1) if dim_hint in (None, 1) else arr.reshape(1, -1)
    if arr.ndim != 2:
        raise MeasureError(f"points must form a (n, d) array, got shape {arr.shape}")
    return arr


def measure(
    points: Sequence | np.ndarray,
    weights: Sequence | np.ndarray,
    domain: str = EUCLIDEAN,
) -> DiscreteSignedMeasure:
    """Build a canonical measure from raw atoms (coalesced, pruned, sorted)."""
    validate_domain(domain)
    pts = _as_point_array(points)
    wts = np.asarray(weights, dtype=float).reshape(-1)
    if pts.shape[0] != wts.shape[0]:
        raise MeasureError(
            f"{pts.shape[0]} points but {wts.shape[0]} weights"
        )
    if pts.shape[0] > 0:
        validate_dim(pts.shape[1])
    if not np.all(np.isfinite(pts)) or not np.all(np.isfinite(wts)):
        raise MeasureError("points and weights must be finite")
    if domain == TORUS and pts.size:
        pts = wrap_torus(pts)
    raw = DiscreteSignedMeasure(_readonly(pts), _readonly(wts), domain)
    return coalesce(raw)


def empty_measure(dim: int, domain: str = EUCLIDEAN) -> DiscreteSignedMeasure:
    validate_domain(domain)
    validate_dim(dim)
    return DiscreteSignedMeasure(
        _readonly(np.zeros((0, dim))), _readonly(np.zeros(0)), domain
    )


def dirac(point: Sequence | float, weight: float = 1.0, domain: str = EUCLIDEAN) -> DiscreteSignedMeasure:
    pt = np.atleast_1d(np.asarray(point, dtype=float))
    return measure(pt.reshape(1, -1), [weight], domain)


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr, dtype=float)
    out.setflags(write=False)
    return out


def _canonical_order(points: np.ndarray, weights: np.ndarray):
    if points.shape[0] <= 1:
        return points, weights
    order = np.lexsort(tuple(points[:, k] for k in range(points.shape[1] - 1, -1, -1)))
    return points[order], weights[order]


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i: int, j: int) -> None:
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            self.parent[max(ri, rj)] = min(ri, rj)


def _merge_pass(points: np.ndarray, weights: np.ndarray, domain: str, eps: float):
    """One clustering pass: merge connected components of the eps-graph."""
    n = points.shape[0]
    order = np.argsort(points[:, 0], kind="stable")
    x0 = points[order, 0]
    uf = _UnionFind(n)
    merged_any = False
    # Sweep over the first coordinate: only nearby-in-x0 pairs can be close.
    start = 0
    for idx in range(n):
        while x0[idx] - x0[start] > eps:
            start += 1
        for prev in range(start, idx):
            i, j = order[prev], order[idx]
            if distance(points[i], points[j], domain) <= eps:
                uf.union(i, j)
                merged_any = True
    if domain == TORUS and n > 1:
        # The sweep misses pairs that wrap around in the first coordinate.
        low = np.nonzero(x0 <= eps)[0]
        high = np.nonzero(x0 >= 1.0 - eps)[0]
        for a in low:
            for b in high:
                i, j = order[a], order[b]
                if i != j and distance(points[i], points[j], domain) <= eps:
                    uf.union(i, j)
                    merged_any = True
    if not merged_any:
        return points, weights, False
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(uf.find(i), []).append(i)
    new_pts = np.zeros((len(groups), points.shape[1]))
    new_wts = np.zeros(len(groups))
    for row, (_, members) in enumerate(sorted(groups.items())):
        idxs = np.array(members)
        w = weights[idxs]
        total_abs = np.sum(np.abs(w))
        ref = points[idxs[0]]
        rel = points[idxs] - ref
        if domain == TORUS:
            rel = rel - np.round(rel)
        if total_abs > 0.0:
            mean_rel = np.sum(np.abs(w)[:, None] * rel, axis=0) / total_abs
        else:
            mean_rel = np.mean(rel, axis=0)
        pos = ref + mean_rel
        if domain == TORUS:
            pos = wrap_torus(pos.reshape(1, -1))[0]
        new_pts[row] = pos
        new_wts[row] = np.sum(w)
    return new_pts, new_wts, True


def coalesce(mu: DiscreteSignedMeasure, eps: float = COALESCE_EPS) -> DiscreteSignedMeasure:
    """Merge atoms within ``eps`` and prune near-zero weights.

    Merged atoms sum their weights and sit at the weight-magnitude
    weighted mean position.  The pass repeats until no pair is within
    ``eps``, so the operation is idempotent.  Output atoms are sorted
    lexicographically by coordinates.
    """
    pts = np.asarray(mu.points, dtype=float)
    wts = np.asarray(mu.weights, dtype=float)
    changed = True
    while changed and pts.shape[0] > 1:
        pts, wts, changed = _merge_pass(pts, wts, mu.domain, eps)
    keep = np.abs(wts) >= WEIGHT_EPS
    pts, wts = pts[keep], wts[keep]
    pts, wts = _canonical_order(pts, wts)
    return DiscreteSignedMeasure(_readonly(pts), _readonly(wts), mu.domain)


def tv_norm(mu: DiscreteSignedMeasure) -> float:
    """Total variation norm: sum of absolute atom weights."""
    return float(np.sum(np.abs(mu.weights)))


def _check_compatible(mu: DiscreteSignedMeasure, nu: DiscreteSignedMeasure) -> None:
    if mu.domain != nu.domain:
        raise MeasureError(f"domain mismatch: {mu.domain} vs {nu.domain}")
    if mu.num_atoms and nu.num_atoms and mu.dim != nu.dim:
        raise MeasureError(f"dimension mismatch: {mu.dim} vs {nu.dim}")


def linear_combine(
    a: float,
    mu: DiscreteSignedMeasure,
    b: float,
    nu: DiscreteSignedMeasure,
) -> DiscreteSignedMeasure:
    """Coalesced atom list of a*mu + b*nu."""
    _check_compatible(mu, nu)
    dim = mu.dim if mu.num_atoms else nu.dim
    pts = np.concatenate([mu.points, nu.points]) if nu.num_atoms or mu.num_atoms else mu.points
    wts = np.concatenate([a * mu.weights, b * nu.weights])
    if pts.shape[0] == 0:
        return empty_measure(dim if dim else 1, mu.domain)
    return coalesce(DiscreteSignedMeasure(_readonly(pts), _readonly(wts), mu.domain))


def multiply_by_function(
    g: BoundedLipschitzFunction | Callable[[np.ndarray], np.ndarray],
    mu: DiscreteSignedMeasure,
) -> DiscreteSignedMeasure:
    """Measure with weights w_i * g(x_i); errors on non-finite values."""
    if mu.num_atoms == 0:
        return mu
    values = np.asarray(g(mu.points) if callable(g) else g.evaluate(mu.points), dtype=float)
    values = values.reshape(-1)
    if values.shape[0] != mu.num_atoms:
        raise MeasureError("function returned wrong number of values")
    if not np.all(np.isfinite(values)):
        raise MeasureError("function returned non-finite values on the support")
    wts = mu.weights * values
    keep = np.abs(wts) >= WEIGHT_EPS
    return DiscreteSignedMeasure(
        _readonly(mu.points[keep]), _readonly(wts[keep]), mu.domain
    )


def jordan_decomposition(
    mu: DiscreteSignedMeasure,
) -> tuple[DiscreteSignedMeasure, DiscreteSignedMeasure]:
    """Positive and negative parts; both returned with positive weights."""
    pos = mu.weights > 0
    neg = mu.weights < 0
    mu_plus = DiscreteSignedMeasure(
        _readonly(mu.points[pos]), _readonly(mu.weights[pos]), mu.domain
    )
    mu_minus = DiscreteSignedMeasure(
        _readonly(mu.points[neg]), _readonly(-mu.weights[neg]), mu.domain
    )
    return mu_plus, mu_minus


def negative_part_tv(mu: DiscreteSignedMeasure) -> float:
    # + 0.0 normalises the empty sum's -0.0.
    return float(-np.sum(mu.weights[mu.weights < 0.0]) + 0.0)


def integrate(
    g: BoundedLipschitzFunction | Callable[[np.ndarray], np.ndarray],
    mu: DiscreteSignedMeasure,
) -> float:
    """Pairing <g, mu> = sum_i w_i g(x_i)."""
    if mu.num_atoms == 0:
        return 0.0
    values = np.asarray(g(mu.points) if callable(g) else g.evaluate(mu.points), dtype=float)
    return float(np.dot(mu.weights, values.reshape(-1)))


# ---------------------------------------------------------------------------
# CSV serialisation: header x1,...,xd,weight then one atom per row.
# ---------------------------------------------------------------------------

def measure_to_csv(mu: DiscreteSignedMeasure) -> str:
    dim = mu.dim
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"x{k + 1}" for k in range(dim)] + ["weight"])
    for row in range(mu.num_atoms):
        writer.writerow(
            [_fmt(c) for c in mu.points[row]] + [_fmt(mu.weights[row])]
        )
    return buf.getvalue()


def _fmt(x: float) -> str:
    return repr(float(x))


def save_measure(mu: DiscreteSignedMeasure, path: str) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(measure_to_csv(mu))


def measure_from_csv(text: str, domain: str = EUCLIDEAN) -> DiscreteSignedMeasure:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise MeasureError("empty measure file") from None
    header = [h.strip() for h in header]
    if len(header) < 2 or header[-1] != "weight":
        raise MeasureError(f"bad measure header {header!r}; expected x1,...,xd,weight")
    dim = len(header) - 1
    expected = [f"x{k + 1}" for k in range(dim)]
    if header[:-1] != expected:
        raise MeasureError(f"bad measure header {header!r}; expected {expected + ['weight']}")
    validate_dim(dim)
    pts: list[list[float]] = []
    wts: list[float] = []
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != dim + 1:
            raise MeasureError(f"row {line_no}: expected {dim + 1} fields, got {len(row)}")
        try:
            values = [float(v) for v in row]
        except ValueError as exc:
            raise MeasureError(f"row {line_no}: {exc}") from None
        pts.append(values[:dim])
        wts.append(values[dim])
    if not pts:
        return empty_measure(dim, domain)
    return measure(np.array(pts), np.array(wts), domain)


def load_measure(path: str, domain: str = EUCLIDEAN) -> DiscreteSignedMeasure:
    with open(path, "r", encoding="ascii") as fh:
        return measure_from_csv(fh.read(), domain)
