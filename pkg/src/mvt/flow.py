"""Characteristic flow maps driven by a velocity field.

Trajectories of dx/dt = v(t, x) are integrated with the classical
fourth-order Runge-Kutta scheme at a fixed step (the last step is
shortened to land exactly on the target time).  Integration backward in
time is supported and is used for semi-Lagrangian density transport.

Alongside positions the solver can carry the integral of div v along
each trajectory; its exponential is the Jacobian determinant of the
flow map, which stays positive because flows of Lipschitz fields are
orientation preserving.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import EUCLIDEAN, TORUS, validate_domain, wrap_torus
from .velocity import VelocityField

_FD_STEP = 1e-5


def default_step(span: float) -> float:
    """Default RK4 step for an integration over ``span`` time units."""
    return max(min(1e-2, 1e-3 * abs(span)), 1e-12)


def _eval_field(v: VelocityField, t: float, x: np.ndarray, domain: str) -> np.ndarray:
    if domain == TORUS:
        return v(t, wrap_torus(x.copy()))
    return v(t, x)


def divergence_of(v: VelocityField, t: float, x: np.ndarray, domain: str) -> np.ndarray:
    """Analytic divergence when available, else central differences."""
    if v.divergence is not None:
        if domain == TORUS:
            return np.asarray(v.divergence(t, wrap_torus(x.copy())), dtype=float)
        return np.asarray(v.divergence(t, x), dtype=float)
    acc = np.zeros(x.shape[0])
    for k in range(x.shape[1]):
        shift = np.zeros(x.shape[1])
        shift[k] = _FD_STEP
        acc += (
            _eval_field(v, t, x + shift, domain)[:, k]
            - _eval_field(v, t, x - shift, domain)[:, k]
        ) / (2.0 * _FD_STEP)
    return acc


def _steps(t_from: float, t_to: float, step_h: float) -> list[float]:
    span = t_to - t_from
    if span == 0.0:
        return []
    if step_h <= 0.0:
        raise ValueError("step_h must be positive")
    direction = 1.0 if span > 0 else -1.0
    n_full = int(abs(span) // step_h)
    steps = [direction * step_h] * n_full
    remainder = span - direction * step_h * n_full
    if abs(remainder) > 1e-14 * max(1.0, abs(span)):
        steps.append(remainder)
    return steps


def advect(
    v: VelocityField,
    t_from: float,
    t_to: float,
    points: np.ndarray,
    step_h: float,
    domain: str = EUCLIDEAN,
) -> np.ndarray:
    """RK4 image of the points under the flow from t_from to t_to."""
    validate_domain(domain)
    x = np.array(points, dtype=float)
    if x.size == 0:
        return x
    t = t_from
    for dt in _steps(t_from, t_to, step_h):
        k1 = _eval_field(v, t, x, domain)
        k2 = _eval_field(v, t + 0.5 * dt, x + 0.5 * dt * k1, domain)
        k3 = _eval_field(v, t + 0.5 * dt, x + 0.5 * dt * k2, domain)
        k4 = _eval_field(v, t + dt, x + dt * k3, domain)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += dt
        if domain == TORUS:
            x = wrap_torus(x)
    return x


def advect_with_logjac(
    v: VelocityField,
    t_from: float,
    t_to: float,
    points: np.ndarray,
    step_h: float,
    domain: str = EUCLIDEAN,
) -> tuple[np.ndarray, np.ndarray]:
    """Advect points and accumulate the integral of div v along each path.

    The returned second array is log det of the flow's Jacobian at each
    point (negated automatically when integrating backward, so that it
    is always the log-Jacobian of the map actually computed).
    """
    validate_domain(domain)
    x = np.array(points, dtype=float)
    logjac = np.zeros(x.shape[0])
    if x.size == 0:
        return x, logjac
    t = t_from
    for dt in _steps(t_from, t_to, step_h):
        k1 = _eval_field(v, t, x, domain)
        j1 = divergence_of(v, t, x, domain)
        x2 = x + 0.5 * dt * k1
        k2 = _eval_field(v, t + 0.5 * dt, x2, domain)
        j2 = divergence_of(v, t + 0.5 * dt, x2, domain)
        x3 = x + 0.5 * dt * k2
        k3 = _eval_field(v, t + 0.5 * dt, x3, domain)
        j3 = divergence_of(v, t + 0.5 * dt, x3, domain)
        x4 = x + dt * k3
        k4 = _eval_field(v, t + dt, x4, domain)
        j4 = divergence_of(v, t + dt, x4, domain)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        logjac = logjac + (dt / 6.0) * (j1 + 2.0 * j2 + 2.0 * j3 + j4)
        t += dt
        if domain == TORUS:
            x = wrap_torus(x)
    return x, logjac


def advect_point(
    v: VelocityField,
    s: float,
    t: float,
    x0: np.ndarray,
    step_h: float,
    domain: str = EUCLIDEAN,
) -> np.ndarray:
    pt = np.atleast_1d(np.asarray(x0, dtype=float)).reshape(1, -1)
    return advect(v, s, t, pt, step_h, domain)[0]


@dataclass(frozen=True)
class FlowMap:
    """Flow map of v from time s to time t at a fixed RK4 step."""

    v: VelocityField
    s: float
    t: float
    step_h: float
    domain: str = EUCLIDEAN

    def advance(self, points: np.ndarray) -> np.ndarray:
        return advect(self.v, self.s, self.t, points, self.step_h, self.domain)

    def log_jacobian(self, points: np.ndarray) -> np.ndarray:
        return advect_with_logjac(self.v, self.s, self.t, points, self.step_h, self.domain)[1]


def flow_map(
    v: VelocityField, s: float, t: float, step_h: float | None = None, domain: str = EUCLIDEAN
) -> FlowMap:
    h = step_h if step_h is not None else default_step(t - s)
    return FlowMap(v, float(s), float(t), float(h), domain)


def simpson_integral(fn: Callable[[float], float], s: float, t: float, panels: int = 128) -> float:
    """Composite Simpson rule with an even number of panels."""
    if t == s:
        return 0.0
    if panels % 2:
        panels += 1
    grid = np.linspace(s, t, panels + 1)
    values = np.array([fn(float(tau)) for tau in grid])
    h = (t - s) / panels
    weights = np.ones(panels + 1)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    return float(h / 3.0 * np.dot(weights, values))


def lipschitz_bound(v: VelocityField, s: float, t: float, panels: int = 128) -> float:
    """exp of the integral of the field's Lipschitz rate over [s, t]."""
    if t < s:
        raise ValueError("need s <= t")
    return float(np.exp(simpson_integral(v.lip_rate, s, t, panels)))


def divergence_band_integrals(v: VelocityField, s: float, t: float, panels: int = 128) -> tuple[float, float]:
    """Integrals of the neg-part and pos-part divergence sup rates."""
    if v.div_neg_rate is None or v.div_pos_rate is None:
        raise ValueError(f"field {v.name!r} lacks divergence rate bounds")
    neg = simpson_integral(v.div_neg_rate, s, t, panels)
    pos = simpson_integral(v.div_pos_rate, s, t, panels)
    return neg, pos


def jacobian_band(v: VelocityField, s: float, t: float) -> tuple[float, float]:
    """Guaranteed enclosure [exp(-int neg), exp(+int pos)] for det of the flow."""
    neg, pos = divergence_band_integrals(v, s, t)
    return float(np.exp(-neg)), float(np.exp(pos))


def jacobian_det(
    v: VelocityField,
    s: float,
    t: float,
    x0: np.ndarray,
    step_h: float | None = None,
    domain: str = EUCLIDEAN,
) -> float:
    h = step_h if step_h is not None else default_step(t - s)
    pt = np.atleast_1d(np.asarray(x0, dtype=float)).reshape(1, -1)
    _, logjac = advect_with_logjac(v, s, t, pt, h, domain)
    return float(np.exp(logjac[0]))


def flow_displacement_bound(v: VelocityField, t0: float, tau: float) -> float:
    """Sup over [t0, t0 + tau] of the certified speed bound."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    return v.sup_bound(t0, t0 + tau)
