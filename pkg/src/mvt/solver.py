"""Fixed-point solver for measure-valued transport--reaction dynamics.

The mild formulation reads

    mu_t = P_{t0,t} nu + integral over [t0, t] of P_{s,t}[f_s(mu_s)] ds,

where P is the push-forward along the velocity flow and f the reaction.
On a short interval the right-hand side is a contraction in the flat
norm and Picard iteration converges geometrically; ``solve_maximal``
chains such intervals, re-reading the total-variation radius at every
restart, until the horizon or a numerical blow-up threshold is reached.

Positivity-sensitive runs use the dilated form of the same equation:
for a shift c >= 0,

    mu_t = e^{-c(t-t0)} P_{t0,t} nu
           + integral of e^{-c(t-s)} P_{s,t}[f_s(mu_s) + c mu_s] ds,

whose integrand is a positive measure whenever c dominates the negative
part of the reaction rate.  Both forms have the same fixed point; the
dilated one keeps every iterate positive term by term.

Discretization commitments (the corresponding continuum statements are
exact): the time integral uses composite trapezoid on ``quad_nodes``
uniform nodes; iterates live on that grid as particle measures; flows
advance node to node, so atoms produced at different nodes stay aligned
across sweeps and coalesce exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .flat_metric import STATUS_OPTIMAL, fm_norm
from .flow import advect_with_logjac, default_step, lipschitz_bound
from .grids import GridDensity, interpolate, lp_norm, with_values
from .measures import (
    DiscreteSignedMeasure,
    linear_combine,
    negative_part_tv,
    tv_norm,
)
from .reactions import ReactionSpec, eval_reaction
from .transport import pushforward_measure
from .velocity import VelocityField

DILATION_MODES = ("none", "auto", "fixed")

# Caps that turn a runaway loop into a diagnosable error.
_MAX_DILATION_PARTS = 100000
_MAX_INTERVALS = 200000
_TV_BLOWUP_FACTOR = 1e6
_LP_BLOWUP_FACTOR = 1e6


class SolverError(RuntimeError):
    """Raised when a solver contract is violated."""


class NonContractionError(SolverError):
    """Picard iteration failed to converge within the iteration budget."""

    def __init__(self, message: str, measured_ratio: float):
        super().__init__(message)
        self.measured_ratio = measured_ratio


@dataclass(frozen=True)
class SolverConfig:
    """Knobs of the interval solver.

    delta is the total-variation cushion: each interval is sized so the
    iterates stay inside the ball of radius ||nu||_TV + delta.  The
    contraction factor is kept at or below 1/2 (the continuum argument
    only needs < 1; the margin absorbs quadrature error).
    """

    delta: float = 1.0
    quad_nodes: int = 33
    picard_tol: float = 1e-8
    picard_max_iter: int = 80
    flow_step_h: float | None = None
    tv_blowup_threshold: float | None = None
    dilation_mode: str = "none"
    dilation_c: float = 0.0
    max_interval_tau: float | None = None

    def __post_init__(self) -> None:
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if self.quad_nodes < 2:
            raise ValueError("quad_nodes must be at least 2")
        if not self.picard_tol >= 1e-12:
            raise ValueError("picard_tol must be at least 1e-12")
        if self.picard_max_iter < 1:
            raise ValueError("picard_max_iter must be at least 1")
        if self.flow_step_h is not None and not self.flow_step_h > 0:
            raise ValueError("flow_step_h must be positive")
        if self.tv_blowup_threshold is not None and not self.tv_blowup_threshold > 0:
            raise ValueError("tv_blowup_threshold must be positive")
        if self.dilation_mode not in DILATION_MODES:
            raise ValueError(f"dilation_mode must be one of {DILATION_MODES}")
        if self.dilation_c < 0:
            raise ValueError("dilation_c must be nonnegative")
        if self.max_interval_tau is not None and not self.max_interval_tau > 0:
            raise ValueError("max_interval_tau must be positive")


@dataclass
class Trajectory:
    """Solution samples and per-node diagnostics on a shared time grid.

    ``picard_iters`` and ``contraction_ratio`` are per-interval
    quantities replicated onto the nodes of their interval;
    ``lp_norm`` is NaN when no density is co-evolved.
    """

    times: np.ndarray
    measures: list[DiscreteSignedMeasure]
    densities: list[GridDensity] | None
    tv_norm: np.ndarray
    neg_part_tv: np.ndarray
    fm_step_distance: np.ndarray
    picard_iters: np.ndarray
    contraction_ratio: np.ndarray
    lp_norm: np.ndarray
    blown_up: bool = False
    blowup_time: float | None = None
    density_blown_up: bool = False
    density_blowup_time: float | None = None
    reached_horizon: bool = False

    def __post_init__(self) -> None:
        n = len(self.times)
        if len(self.measures) != n:
            raise SolverError("trajectory times and measures misaligned")
        if self.densities is not None and len(self.densities) != n:
            raise SolverError("trajectory times and densities misaligned")
        if n and not np.all(np.diff(self.times) > 0):
            raise SolverError("trajectory times must be strictly increasing")
        if n and not np.all(np.isfinite(self.tv_norm)):
            raise SolverError("nonfinite total variation in trajectory")

    @property
    def final_time(self) -> float:
        return float(self.times[-1])

    @property
    def final_measure(self) -> DiscreteSignedMeasure:
        return self.measures[-1]


# ---------------------------------------------------------------------------
# Step and dilation selection.
# ---------------------------------------------------------------------------

def choose_step(
    spec: ReactionSpec,
    R: float,
    delta: float,
    *,
    velocity: VelocityField | None = None,
    t0: float = 0.0,
    cap: float = math.inf,
    contraction_factor: float = 0.5,
) -> float:
    """Interval length keeping iterates in the TV ball and contracting.

    Returns min of delta / c_f(R + delta) (ball invariance), the largest
    tau with l_f(R + delta) * L^v(t0, t0 + tau) * tau <= 1/2 (contraction
    with a safety factor), and ``cap``.  With no velocity the flow
    Lipschitz bound L^v is 1.
    """
    if R < 0 or delta <= 0:
        raise ValueError("need R >= 0 and delta > 0")
    cf = float(spec.c_f(R + delta))
    lf = float(spec.l_f(R + delta))
    if not (math.isfinite(cf) and math.isfinite(lf)):
        raise SolverError(f"reaction {spec.name!r} has nonfinite constants at R={R + delta}")
    tau = cap
    if cf > 0:
        tau = min(tau, delta / cf)
    if lf > 0:
        # L^v grows with tau, so iterate the decreasing map
        # tau -> factor / (lf * L^v(tau)); it converges monotonically.
        bound = contraction_factor / lf
        tau = min(tau, bound)
        if velocity is not None and math.isfinite(tau):
            for _ in range(30):
                lv = lipschitz_bound(velocity, t0, t0 + tau)
                new_tau = min(tau, bound / lv)
                if abs(new_tau - tau) <= 1e-12 * max(tau, 1e-30):
                    tau = new_tau
                    break
                tau = new_tau
    if not tau > 0:
        raise SolverError("selected step is not positive")
    return tau


def _dilation_parts(lf: float, c: float, l_v: float, tau: float, limit: float) -> int:
    """Smallest N with (lf + c) * l_v * (1 - e^{-c tau / N}) / c < limit."""

    def factor(parts: int) -> float:
        if c == 0.0:
            return lf * l_v * tau / parts
        return (lf + c) * l_v * (1.0 - math.exp(-c * tau / parts)) / c

    parts = 1
    while factor(parts) >= limit:
        parts += 1
        if parts > _MAX_DILATION_PARTS:
            raise SolverError("dilation partition does not terminate")
    return parts


def choose_dilation(
    spec: ReactionSpec, R: float, T: float, tau: float, l_v: float
) -> tuple[float, int]:
    """Positivity shift c = c_pos(2R, T) and the contraction partition N.

    N is the smallest partition count making the dilated one-step factor
    (l_f(2R) + c) * l_v * (1 - e^{-c tau / N}) / c drop below 1 (with the
    obvious c -> 0 limit l_f * l_v * tau / N).
    """
    if R <= 0 or tau <= 0:
        raise ValueError("need R > 0 and tau > 0")
    c = float(spec.c_pos(2.0 * R, T))
    lf = float(spec.l_f(2.0 * R))
    return c, _dilation_parts(lf, c, l_v, tau, 1.0)


# ---------------------------------------------------------------------------
# Picard sweeps on a quadrature grid.
# ---------------------------------------------------------------------------

def _transport_curve(
    v: VelocityField,
    nu: DiscreteSignedMeasure,
    times: np.ndarray,
    h: float,
) -> list[DiscreteSignedMeasure]:
    out = [nu]
    cur = nu
    for k in range(len(times) - 1):
        cur = pushforward_measure(v, float(times[k]), float(times[k + 1]), cur, h)
        out.append(cur)
    return out


def _sweep_measures(
    spec: ReactionSpec,
    v: VelocityField,
    times: np.ndarray,
    curve: Sequence[DiscreteSignedMeasure],
    c: float,
    h: float,
) -> list[DiscreteSignedMeasure]:
    """One application of the (dilated) Picard operator on the node grid.

    Uses the incremental trapezoid identity: with ds the node spacing and
    g_j = f_{t_j}(mu_j) + c mu_j,

        out_{k+1} = e^{-c ds} P_{t_k, t_{k+1}}[out_k + (ds/2) g_k]
                    + (ds/2) g_{k+1},

    which unrolls exactly to the composite-trapezoid discretization of
    the dilated variation-of-constants integral.
    """
    ds = float(times[1] - times[0])
    decay = math.exp(-c * ds)
    g = []
    for t_j, mu_j in zip(times, curve):
        r = eval_reaction(spec, float(t_j), mu_j)
        if c != 0.0:
            r = linear_combine(1.0, r, c, mu_j)
        g.append(r)
    out = [curve[0]]
    acc = curve[0]
    for k in range(len(times) - 1):
        half = linear_combine(1.0, acc, 0.5 * ds, g[k])
        moved = pushforward_measure(v, float(times[k]), float(times[k + 1]), half, h)
        acc = linear_combine(decay, moved, 0.5 * ds, g[k + 1])
        out.append(acc)
    return out


def picard_step(
    spec: ReactionSpec,
    v: VelocityField,
    t0: float,
    tau: float,
    curve: Sequence[DiscreteSignedMeasure],
    *,
    step_h: float | None = None,
) -> list[DiscreteSignedMeasure]:
    """Apply the Picard operator to a curve sampled on uniform nodes."""
    return picard_step_dilated(spec, v, 0.0, t0, tau, curve, step_h=step_h)


def picard_step_dilated(
    spec: ReactionSpec,
    v: VelocityField,
    c: float,
    t0: float,
    tau: float,
    curve: Sequence[DiscreteSignedMeasure],
    *,
    step_h: float | None = None,
) -> list[DiscreteSignedMeasure]:
    """Dilated Picard operator; c = 0 reduces to the plain one."""
    if c < 0:
        raise ValueError("dilation shift must be nonnegative")
    if len(curve) < 2:
        raise ValueError("curve needs at least two nodes")
    if tau <= 0:
        raise ValueError("tau must be positive")
    times = np.linspace(t0, t0 + tau, len(curve))
    h = step_h if step_h is not None else default_step(tau)
    return _sweep_measures(spec, v, times, curve, c, h)


def _fm_of(diff: DiscreteSignedMeasure) -> float:
    res = fm_norm(diff)
    if res.status != STATUS_OPTIMAL:
        raise SolverError(f"flat-norm evaluation failed with status {res.status!r}")
    return res.value


def _curve_distance(
    new: Sequence[DiscreteSignedMeasure],
    old: Sequence[DiscreteSignedMeasure],
    tol: float,
) -> float:
    """sup over nodes of the flat distance between two iterates.

    Total variation dominates the flat norm, so nodes whose TV gap is
    already far below tolerance skip the LP.
    """
    worst = 0.0
    for a, b in zip(new, old):
        diff = linear_combine(1.0, a, -1.0, b)
        d = tv_norm(diff)
        if d > 1e-3 * tol:
            d = _fm_of(diff)
        worst = max(worst, d)
    return worst


# ---------------------------------------------------------------------------
# Density co-evolution (semi-Lagrangian Picard on the same node grid).
# ---------------------------------------------------------------------------

class _DensityPanels:
    """Cached backward characteristics per quadrature panel.

    Feet and Jacobian factors depend only on the panel and the grid, not
    on the iterate, so each panel is integrated once per interval.
    """

    def __init__(self, v: VelocityField, grid: GridDensity, times: np.ndarray, h: float):
        self.grid = grid
        centers = grid.center_points()
        self.feet: list[np.ndarray] = []
        self.jac: list[np.ndarray] = []
        for k in range(len(times) - 1):
            feet, logjac_back = advect_with_logjac(
                v, float(times[k + 1]), float(times[k]), centers, h, grid.domain
            )
            self.feet.append(feet)
            self.jac.append(np.exp(logjac_back))

    def push(self, k: int, values: np.ndarray) -> np.ndarray:
        carrier = with_values(self.grid, values.reshape(self.grid.values.shape))
        moved = interpolate(carrier, self.feet[k]) * self.jac[k]
        return moved.reshape(self.grid.values.shape)


def _density_reaction_values(
    spec: ReactionSpec, t: float, u: GridDensity
) -> np.ndarray:
    if spec.density_action is None:
        return np.zeros_like(u.values)
    return spec.density_action(t, u).values


def _transport_density_curve(panels: _DensityPanels, u0: GridDensity, n_nodes: int) -> list[np.ndarray]:
    vals = [np.asarray(u0.values, dtype=float)]
    for k in range(n_nodes - 1):
        vals.append(panels.push(k, vals[-1]))
    return vals


def _sweep_density(
    spec: ReactionSpec,
    panels: _DensityPanels,
    times: np.ndarray,
    curve_vals: Sequence[np.ndarray],
    c: float,
) -> list[np.ndarray]:
    ds = float(times[1] - times[0])
    decay = math.exp(-c * ds)
    grid = panels.grid
    g = []
    for t_j, vals_j in zip(times, curve_vals):
        u_j = with_values(grid, vals_j)
        g.append(_density_reaction_values(spec, float(t_j), u_j) + c * vals_j)
    out = [curve_vals[0]]
    acc = curve_vals[0]
    for k in range(len(times) - 1):
        moved = panels.push(k, acc + 0.5 * ds * g[k])
        acc = decay * moved + 0.5 * ds * g[k + 1]
        out.append(acc)
    return out


# ---------------------------------------------------------------------------
# Interval fixed point and chaining.
# ---------------------------------------------------------------------------

@dataclass
class _IntervalResult:
    times: np.ndarray
    measures: list[DiscreteSignedMeasure]
    density_values: list[np.ndarray] | None
    iters: int
    ratio: float


def _fixed_point(
    spec: ReactionSpec,
    v: VelocityField,
    t0: float,
    tau: float,
    nu: DiscreteSignedMeasure,
    config: SolverConfig,
    c: float,
    u0: GridDensity | None,
) -> _IntervalResult:
    times = np.linspace(t0, t0 + tau, config.quad_nodes)
    h = config.flow_step_h if config.flow_step_h is not None else default_step(tau)
    curve = _transport_curve(v, nu, times, h)
    panels = None
    dens_vals: list[np.ndarray] | None = None
    dens_tol = math.inf
    if u0 is not None:
        if (spec.production is not None or spec.rate is not None) and spec.density_action is None:
            raise SolverError(
                f"reaction {spec.name!r} has no density action; cannot co-evolve a density"
            )
        panels = _DensityPanels(v, u0, times, h)
        dens_vals = _transport_density_curve(panels, u0, len(times))
        dens_tol = config.picard_tol * max(1.0, lp_norm(u0))

    ratio = 0.0
    prev_d: float | None = None
    iters = 0
    for _ in range(config.picard_max_iter):
        new_curve = _sweep_measures(spec, v, times, curve, c, h)
        d = _curve_distance(new_curve, curve, config.picard_tol)
        d_dens = 0.0
        if dens_vals is not None:
            new_dens = _sweep_density(spec, panels, times, dens_vals, c)
            grid = panels.grid
            for a, b in zip(new_dens, dens_vals):
                diff = with_values(grid, (a - b).reshape(grid.values.shape))
                d_dens = max(d_dens, lp_norm(diff))
            dens_vals = new_dens
        if prev_d is not None and prev_d > 0.0:
            ratio = max(ratio, d / prev_d)
        curve = new_curve
        iters += 1
        if d <= config.picard_tol and d_dens <= dens_tol:
            break
        prev_d = d
    else:
        raise NonContractionError(
            f"Picard iteration did not reach tol={config.picard_tol} in "
            f"{config.picard_max_iter} sweeps on [{t0}, {t0 + tau}] "
            f"(measured contraction ratio {ratio:.3f})",
            measured_ratio=ratio,
        )

    ball = tv_norm(nu) + config.delta
    slack = 1e-6 * ball + 10.0 * config.picard_tol
    worst_tv = max(tv_norm(m) for m in curve)
    if worst_tv > ball + slack:
        raise SolverError(
            f"iterates left the invariant TV ball: {worst_tv} > {ball}"
        )
    return _IntervalResult(times, curve, dens_vals, iters, ratio)


def _dilation_shift(
    spec: ReactionSpec,
    v: VelocityField,
    t0: float,
    tau: float,
    nu: DiscreteSignedMeasure,
    config: SolverConfig,
) -> tuple[float, int]:
    """Shift c and partition count for one interval, per dilation_mode."""
    if config.dilation_mode == "none":
        return 0.0, 1
    if config.dilation_mode == "auto" and not nu.is_positive:
        return 0.0, 1
    ball = tv_norm(nu) + config.delta
    lv = lipschitz_bound(v, t0, t0 + tau)
    if config.dilation_mode == "fixed":
        c = config.dilation_c
    else:
        c = float(spec.c_pos(2.0 * ball, t0 + tau))
    # Partition until the dilated factor is at or below the same 1/2
    # safety margin used by choose_step.
    parts = _dilation_parts(float(spec.l_f(2.0 * ball)), c, lv, tau, 0.5)
    return c, parts


def solve_interval(
    spec: ReactionSpec,
    v: VelocityField,
    t0: float,
    tau: float,
    nu: DiscreteSignedMeasure,
    config: SolverConfig,
    *,
    initial_density: GridDensity | None = None,
) -> Trajectory:
    """Mild solution on [t0, t0 + tau] for tau within choose_step."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    c, parts = _dilation_shift(spec, v, t0, tau, nu, config)
    times_all: list[float] = [t0]
    measures_all: list[DiscreteSignedMeasure] = [nu]
    dens_all: list[GridDensity] | None = None
    if initial_density is not None:
        dens_all = [initial_density]
    iters_all: list[int] = [0]
    ratio_all: list[float] = [0.0]

    cur_mu = nu
    cur_u = initial_density
    for i in range(parts):
        seg_start = t0 + tau * i / parts
        seg_end = t0 + tau * (i + 1) / parts
        res = _fixed_point(
            spec, v, seg_start, seg_end - seg_start, cur_mu, config, c, cur_u
        )
        for j in range(1, len(res.times)):
            times_all.append(float(res.times[j]))
            measures_all.append(res.measures[j])
            iters_all.append(res.iters)
            ratio_all.append(res.ratio)
            if dens_all is not None:
                grid = cur_u
                dens_all.append(
                    with_values(grid, res.density_values[j].reshape(grid.values.shape))
                )
        cur_mu = res.measures[-1]
        if dens_all is not None:
            cur_u = dens_all[-1]

    return _assemble(times_all, measures_all, dens_all, iters_all, ratio_all)


def _assemble(
    times: list[float],
    measures: list[DiscreteSignedMeasure],
    densities: list[GridDensity] | None,
    iters: list[int],
    ratios: list[float],
) -> Trajectory:
    n = len(times)
    tv = np.array([tv_norm(m) for m in measures])
    neg = np.array([negative_part_tv(m) for m in measures])
    fm_step = np.zeros(n)
    for j in range(1, n):
        diff = linear_combine(1.0, measures[j], -1.0, measures[j - 1])
        fm_step[j] = _fm_of(diff)
    lp = np.full(n, np.nan)
    if densities is not None:
        lp = np.array([lp_norm(u) for u in densities])
    return Trajectory(
        times=np.array(times),
        measures=measures,
        densities=densities,
        tv_norm=tv,
        neg_part_tv=neg,
        fm_step_distance=fm_step,
        picard_iters=np.array(iters, dtype=int),
        contraction_ratio=np.array(ratios),
        lp_norm=lp,
    )


def _concat(base: Trajectory, extra: Trajectory) -> Trajectory:
    """Append a trajectory starting at base's final time (node shared)."""
    dens = None
    if base.densities is not None and extra.densities is not None:
        dens = base.densities + extra.densities[1:]
    return Trajectory(
        times=np.concatenate([base.times, extra.times[1:]]),
        measures=base.measures + extra.measures[1:],
        densities=dens,
        tv_norm=np.concatenate([base.tv_norm, extra.tv_norm[1:]]),
        neg_part_tv=np.concatenate([base.neg_part_tv, extra.neg_part_tv[1:]]),
        fm_step_distance=np.concatenate([base.fm_step_distance, extra.fm_step_distance[1:]]),
        picard_iters=np.concatenate([base.picard_iters, extra.picard_iters[1:]]),
        contraction_ratio=np.concatenate([base.contraction_ratio, extra.contraction_ratio[1:]]),
        lp_norm=np.concatenate([base.lp_norm, extra.lp_norm[1:]]),
        blown_up=extra.blown_up or base.blown_up,
        blowup_time=extra.blowup_time if extra.blowup_time is not None else base.blowup_time,
        density_blown_up=extra.density_blown_up or base.density_blown_up,
        density_blowup_time=(
            extra.density_blowup_time
            if extra.density_blowup_time is not None
            else base.density_blowup_time
        ),
        reached_horizon=extra.reached_horizon,
    )


def _truncate_at(traj: Trajectory, idx: int) -> Trajectory:
    """Keep nodes 0..idx inclusive."""
    sl = slice(0, idx + 1)
    return Trajectory(
        times=traj.times[sl],
        measures=traj.measures[: idx + 1],
        densities=None if traj.densities is None else traj.densities[: idx + 1],
        tv_norm=traj.tv_norm[sl],
        neg_part_tv=traj.neg_part_tv[sl],
        fm_step_distance=traj.fm_step_distance[sl],
        picard_iters=traj.picard_iters[sl],
        contraction_ratio=traj.contraction_ratio[sl],
        lp_norm=traj.lp_norm[sl],
        blown_up=traj.blown_up,
        blowup_time=traj.blowup_time,
        density_blown_up=traj.density_blown_up,
        density_blowup_time=traj.density_blowup_time,
        reached_horizon=False,
    )


def solve_maximal(
    spec: ReactionSpec,
    v: VelocityField,
    nu: DiscreteSignedMeasure,
    t0: float,
    horizon: float,
    config: SolverConfig,
    *,
    initial_density: GridDensity | None = None,
) -> Trajectory:
    """Chain intervals until the horizon or a blow-up threshold.

    Blow-up is reported, not raised: the trajectory ends at the first
    stored node whose total variation (or density L^p norm, when a
    density is co-evolved) exceeds its threshold, with the flags and
    detection times set.
    """
    if not horizon > t0:
        raise ValueError("horizon must exceed t0")
    tv_threshold = config.tv_blowup_threshold
    if tv_threshold is None:
        tv_threshold = _TV_BLOWUP_FACTOR * max(tv_norm(nu), 1.0)
    lp_threshold = math.inf
    if initial_density is not None:
        lp_threshold = _LP_BLOWUP_FACTOR * max(lp_norm(initial_density), 1.0)

    span = horizon - t0
    traj: Trajectory | None = None
    cur_mu = nu
    cur_u = initial_density
    t = t0
    for _ in range(_MAX_INTERVALS):
        remaining = horizon - t
        if remaining <= 1e-12 * max(1.0, abs(span)):
            break
        cap = remaining
        if config.max_interval_tau is not None:
            cap = min(cap, config.max_interval_tau)
        tau = choose_step(
            spec, tv_norm(cur_mu), config.delta, velocity=v, t0=t, cap=cap
        )
        if tau >= remaining * (1.0 - 1e-12):
            tau = remaining
        seg = solve_interval(
            spec, v, t, tau, cur_mu, config, initial_density=cur_u
        )
        traj = seg if traj is None else _concat(traj, seg)
        # Blow-up check over the freshly stored nodes.
        over_tv = np.nonzero(traj.tv_norm > tv_threshold)[0]
        over_lp = (
            np.nonzero(traj.lp_norm > lp_threshold)[0]
            if traj.densities is not None
            else np.array([], dtype=int)
        )
        if over_tv.size or over_lp.size:
            idx = int(min(
                over_tv[0] if over_tv.size else np.inf,
                over_lp[0] if over_lp.size else np.inf,
            ))
            traj = _truncate_at(traj, idx)
            if over_tv.size and over_tv[0] == idx:
                traj.blown_up = True
                traj.blowup_time = float(traj.times[-1])
            if over_lp.size and over_lp[0] == idx:
                traj.density_blown_up = True
                traj.density_blowup_time = float(traj.times[-1])
            return traj
        cur_mu = traj.final_measure
        if traj.densities is not None:
            cur_u = traj.densities[-1]
        t = traj.final_time
    else:
        raise SolverError("interval budget exhausted before reaching the horizon")
    if traj is None:
        raise SolverError("empty horizon")
    traj.reached_horizon = True
    return traj


def sample_trajectory(
    v: VelocityField,
    times: np.ndarray,
    measures: Sequence[DiscreteSignedMeasure],
    t: float,
    *,
    step_h: float | None = None,
) -> DiscreteSignedMeasure:
    """Interpolate a stored curve at an off-grid time.

    Both bracketing node measures are carried to time t along the flow
    and blended linearly in their weights, which keeps the interpolant
    in the particle representation.
    """
    if not times[0] <= t <= times[-1]:
        raise ValueError("t outside the stored range")
    j = int(np.searchsorted(times, t, side="right") - 1)
    j = min(j, len(times) - 2)
    t_lo, t_hi = float(times[j]), float(times[j + 1])
    theta = (t - t_lo) / (t_hi - t_lo)
    h = step_h if step_h is not None else default_step(t_hi - t_lo)
    fwd = pushforward_measure(v, t_lo, t, measures[j], h)
    bwd = pushforward_measure(v, t_hi, t, measures[j + 1], h)
    return linear_combine(1.0 - theta, fwd, theta, bwd)
