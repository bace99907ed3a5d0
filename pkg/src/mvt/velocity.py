"""Time-dependent velocity fields with certified bounds.

A field carries, besides its evaluation callable, analytic rate
functions of time: a sup-norm bound, a spatial Lipschitz bound and
bounds on the positive and negative parts of its divergence.  The
bounds are supplied with the field rather than estimated, because every
quantitative statement downstream (operator norms, Jacobian bands,
density estimates) consumes them as certificates.

The built-in families are ``constant``, ``linear``, ``rotation2d``,
``shear`` and ``time_oscillating``; see :func:`builtin_field` for the
parameter conventions.  Fields whose exact form is unbounded, such as
``linear``, ship with a working radius: the certified sup bound holds
on the ball of that radius, which the caller must choose to contain
the dynamics.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import validate_dim

FIELD_NAMES = ("constant", "linear", "rotation2d", "shear", "time_oscillating")

_DEFAULT_RADIUS = 10.0


@dataclass(frozen=True)
class VelocityField:
    """Velocity field t, (n, d) points -> (n, d) velocities, with bounds."""

    eval: Callable[[float, np.ndarray], np.ndarray]
    sup_rate: Callable[[float], float]
    lip_rate: Callable[[float], float]
    dim: int
    divergence: Callable[[float, np.ndarray], np.ndarray] | None = None
    div_neg_rate: Callable[[float], float] | None = None
    div_pos_rate: Callable[[float], float] | None = None
    torus_compatible: bool = False
    name: str = ""

    def __call__(self, t: float, points: np.ndarray) -> np.ndarray:
        return np.asarray(self.eval(float(t), np.asarray(points, dtype=float)), dtype=float)

    def sup_bound(self, s: float, t: float, samples: int = 1025) -> float:
        """Bound on ||v_tau||_inf over tau in [s, t] (dense max of sup_rate)."""
        grid = np.linspace(min(s, t), max(s, t), samples)
        return float(max(self.sup_rate(float(tau)) for tau in grid))

    def lip_sup(self, s: float, t: float, samples: int = 1025) -> float:
        grid = np.linspace(min(s, t), max(s, t), samples)
        return float(max(self.lip_rate(float(tau)) for tau in grid))


def zero_field(dim: int) -> VelocityField:
    validate_dim(dim)
    return VelocityField(
        eval=lambda t, x: np.zeros_like(x),
        sup_rate=lambda t: 0.0,
        lip_rate=lambda t: 0.0,
        dim=dim,
        divergence=lambda t, x: np.zeros(x.shape[0]),
        div_neg_rate=lambda t: 0.0,
        div_pos_rate=lambda t: 0.0,
        torus_compatible=True,
        name="zero",
    )


def builtin_field(name: str, params: list[float], dim: int) -> VelocityField:
    """Construct a built-in field.

    Parameter conventions (radius defaults to 10 where it appears; it
    only affects the certified sup bound, not the dynamics):

    * ``constant``: components ``[c1, ..., cd]``.
    * ``linear``: ``[a]`` or ``[a, radius]``; v(x) = a * x.
    * ``rotation2d``: ``[omega]``, ``[omega, cx, cy]`` or
      ``[omega, cx, cy, radius]``; rigid rotation about the centre.
    * ``shear``: ``[a]`` or ``[a, radius]``; v(x, y) = (a * y, 0).
    * ``time_oscillating``: ``[amp, period, u1, ..., ud]``;
      v(t, x) = amp * sin(2 pi t / period) * u, spatially constant.
    """
    validate_dim(dim)
    params = [float(p) for p in params]
    if name == "constant":
        if len(params) != dim:
            raise ValueError(f"constant field in dim {dim} needs {dim} components")
        c = np.array(params)
        speed = float(np.linalg.norm(c))
        return VelocityField(
            eval=lambda t, x: np.broadcast_to(c, x.shape).copy(),
            sup_rate=lambda t: speed,
            lip_rate=lambda t: 0.0,
            dim=dim,
            divergence=lambda t, x: np.zeros(x.shape[0]),
            div_neg_rate=lambda t: 0.0,
            div_pos_rate=lambda t: 0.0,
            torus_compatible=True,
            name="constant",
        )
    if name == "linear":
        if len(params) not in (1, 2):
            raise ValueError("linear field takes [a] or [a, radius]")
        a = params[0]
        radius = params[1] if len(params) == 2 else _DEFAULT_RADIUS
        div_val = a * dim
        return VelocityField(
            eval=lambda t, x: a * x,
            sup_rate=lambda t: abs(a) * radius,
            lip_rate=lambda t: abs(a),
            dim=dim,
            divergence=lambda t, x: np.full(x.shape[0], div_val),
            div_neg_rate=lambda t: max(0.0, -div_val),
            div_pos_rate=lambda t: max(0.0, div_val),
            torus_compatible=False,
            name="linear",
        )
    if name == "rotation2d":
        if dim != 2:
            raise ValueError("rotation2d requires dimension 2")
        if len(params) not in (1, 3, 4):
            raise ValueError("rotation2d takes [omega], [omega, cx, cy] or [omega, cx, cy, radius]")
        omega = params[0]
        center = np.array(params[1:3]) if len(params) >= 3 else np.zeros(2)
        radius = params[3] if len(params) == 4 else _DEFAULT_RADIUS

        def _eval(t: float, x: np.ndarray) -> np.ndarray:
            rel = x - center
            return omega * np.stack([-rel[:, 1], rel[:, 0]], axis=1)

        return VelocityField(
            eval=_eval,
            sup_rate=lambda t: abs(omega) * radius,
            lip_rate=lambda t: abs(omega),
            dim=2,
            divergence=lambda t, x: np.zeros(x.shape[0]),
            div_neg_rate=lambda t: 0.0,
            div_pos_rate=lambda t: 0.0,
            torus_compatible=False,
            name="rotation2d",
        )
    if name == "shear":
        if dim != 2:
            raise ValueError("shear requires dimension 2")
        if len(params) not in (1, 2):
            raise ValueError("shear takes [a] or [a, radius]")
        a = params[0]
        radius = params[1] if len(params) == 2 else _DEFAULT_RADIUS

        def _eval(t: float, x: np.ndarray) -> np.ndarray:
            out = np.zeros_like(x)
            out[:, 0] = a * x[:, 1]
            return out

        return VelocityField(
            eval=_eval,
            sup_rate=lambda t: abs(a) * radius,
            lip_rate=lambda t: abs(a),
            dim=2,
            divergence=lambda t, x: np.zeros(x.shape[0]),
            div_neg_rate=lambda t: 0.0,
            div_pos_rate=lambda t: 0.0,
            torus_compatible=False,
            name="shear",
        )
    if name == "time_oscillating":
        if len(params) != 2 + dim:
            raise ValueError(f"time_oscillating in dim {dim} takes [amp, period, u1..u{dim}]")
        amp, period = params[0], params[1]
        if period == 0.0:
            raise ValueError("time_oscillating period must be nonzero")
        u = np.array(params[2:])
        u_norm = float(np.linalg.norm(u))

        def _eval(t: float, x: np.ndarray) -> np.ndarray:
            scale = amp * np.sin(2.0 * np.pi * t / period)
            return np.broadcast_to(scale * u, x.shape).copy()

        return VelocityField(
            eval=_eval,
            sup_rate=lambda t: abs(amp * np.sin(2.0 * np.pi * t / period)) * u_norm,
            lip_rate=lambda t: 0.0,
            dim=dim,
            divergence=lambda t, x: np.zeros(x.shape[0]),
            div_neg_rate=lambda t: 0.0,
            div_pos_rate=lambda t: 0.0,
            torus_compatible=True,
            name="time_oscillating",
        )
    raise ValueError(f"unknown field name {name!r}; expected one of {FIELD_NAMES}")
