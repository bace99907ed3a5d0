"""Scenario configuration: parsed run descriptions and the bundled set.

A scenario bundles everything one simulation needs: domain, velocity
field, reaction, initial measure, time window, solver settings, and an
optional tracked density.  Scenarios come from INI-style config files
(see ``parse_scenario``) or from the bundled registry used by the
verification suites.

Config schema (unknown sections or keys are errors):

    [scenario]
    name = drift_logistic
    domain = euclidean          ; euclidean | torus
    dim = 1
    t0 = 0.0
    horizon = 1.0
    seed = 42                   ; feeds every random draw in the run

    [field]
    name = constant             ; zero | constant | linear | rotation2d
    params = 0.3                ;   | shear | time_oscillating

    [reaction]
    name = logistic             ; zero | linear_rate | logistic | death_rate
    params = 1.0, 2.0           ;   | dirac_source | smoothed_source | mass_rate

    [initial]
    kind = diracs               ; diracs | ring | random_cloud | csv | grid
    params = 1.0, 0.0, 1.0, 0.5 ; diracs: weight, coords, weight, coords, ...
    path =                      ; csv kind only

    [solver]                    ; all keys optional
    delta = 1.0
    quad_nodes = 33
    picard_tol = 1e-8
    picard_max_iter = 80
    flow_step_h =
    tv_blowup_threshold =
    dilation_mode = none        ; none | auto | fixed
    dilation_c = 0.0
    max_interval_tau =

    [density]                   ; optional section
    kind = gaussian             ; gaussian | uniform | csv
    box = -2.0, 2.0
    cells = 128
    p = 2.0
    params = 0.5                ; gaussian: sigma (per axis, centered)
    path =

    [output]                    ; optional section
    snapshots = 11
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass

import numpy as np

from .geometry import DOMAIN_KINDS, EUCLIDEAN, TORUS
from .grids import GridDensity, gaussian_density, load_density, quantize, uniform_density
from .measures import DiscreteSignedMeasure, load_measure, measure
from .reactions import REACTION_NAMES, ReactionSpec, builtin_reaction
from .solver import SolverConfig
from .velocity import FIELD_NAMES, VelocityField, builtin_field, zero_field


class ScenarioError(ValueError):
    """Configuration rejected; the message names the offending field."""


@dataclass(frozen=True)
class Scenario:
    name: str
    domain: str
    dim: int
    velocity: VelocityField
    reaction: ReactionSpec
    initial: DiscreteSignedMeasure
    t0: float
    horizon: float
    solver: SolverConfig
    density: GridDensity | None = None

    def __post_init__(self) -> None:
        if not self.horizon > self.t0:
            raise ScenarioError("horizon must exceed t0")
        if self.dim not in (1, 2, 3):
            raise ScenarioError("dim must be 1, 2 or 3")
        if self.domain not in DOMAIN_KINDS:
            raise ScenarioError(f"domain must be one of {DOMAIN_KINDS}")


@dataclass(frozen=True)
class OutputOptions:
    snapshots: int = 11

    def __post_init__(self) -> None:
        if self.snapshots < 2:
            raise ScenarioError("snapshots must be at least 2")


INITIAL_KINDS = ("diracs", "ring", "random_cloud", "csv", "grid")


def initial_measure(
    kind: str,
    params: list[float],
    dim: int,
    domain: str,
    *,
    path: str | None = None,
    density: GridDensity | None = None,
    seed: int = 42,
) -> DiscreteSignedMeasure:
    """Build an initial measure from a config description."""
    if kind == "diracs":
        width = dim + 1
        if not params or len(params) % width != 0:
            raise ScenarioError(
                f"diracs in dim {dim} need groups of {width} numbers (weight, coords)"
            )
        rows = np.asarray(params, dtype=float).reshape(-1, width)
        return measure(rows[:, 1:], rows[:, 0], domain)
    if kind == "ring":
        if dim != 2:
            raise ScenarioError("ring initial data is two-dimensional")
        if len(params) not in (3, 5):
            raise ScenarioError("ring takes [n, radius, total_weight] or ... + center")
        n = int(params[0])
        radius, total = params[1], params[2]
        center = np.array(params[3:5]) if len(params) == 5 else np.zeros(2)
        if n < 1:
            raise ScenarioError("ring needs at least one atom")
        angles = 2.0 * np.pi * np.arange(n) / n
        pts = center + radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
        return measure(pts, np.full(n, total / n), domain)
    if kind == "random_cloud":
        if len(params) != 3:
            raise ScenarioError("random_cloud takes [n, scale, total_weight]")
        n, scale, total = int(params[0]), params[1], params[2]
        if n < 1:
            raise ScenarioError("random_cloud needs at least one atom")
        rng = np.random.default_rng(seed)
        if domain == TORUS:
            pts = rng.uniform(0.0, 1.0, size=(n, dim))
        else:
            pts = rng.uniform(-scale, scale, size=(n, dim))
        return measure(pts, np.full(n, total / n), domain)
    if kind == "csv":
        if not path:
            raise ScenarioError("csv initial data needs a path")
        return load_measure(path, domain)
    if kind == "grid":
        if density is None:
            raise ScenarioError("grid initial data needs a [density] section")
        return quantize(density)
    raise ScenarioError(f"unknown initial kind {kind!r}; expected one of {INITIAL_KINDS}")


# ---------------------------------------------------------------------------
# Config file parsing.
# ---------------------------------------------------------------------------

_ALLOWED_KEYS = {
    "scenario": {"name", "domain", "dim", "t0", "horizon", "seed"},
    "field": {"name", "params"},
    "reaction": {"name", "params"},
    "initial": {"kind", "params", "path"},
    "solver": {
        "delta",
        "quad_nodes",
        "picard_tol",
        "picard_max_iter",
        "flow_step_h",
        "tv_blowup_threshold",
        "dilation_mode",
        "dilation_c",
        "max_interval_tau",
    },
    "density": {"kind", "box", "cells", "p", "params", "path"},
    "output": {"snapshots"},
}
_REQUIRED_SECTIONS = ("scenario", "field", "reaction", "initial")


def _float_list(raw: str) -> list[float]:
    raw = raw.replace(",", " ")
    try:
        return [float(tok) for tok in raw.split()]
    except ValueError as exc:
        raise ScenarioError(f"expected a list of numbers, got {raw!r}") from exc


def _get(section, key: str, default: str | None = None) -> str | None:
    val = section.get(key, default)
    if val is None:
        return None
    val = val.strip()
    return val if val else None


def _parse_density(section, domain: str, dim: int) -> GridDensity:
    kind = _get(section, "kind")
    if kind is None:
        raise ScenarioError("[density] needs a kind")
    path = _get(section, "path")
    if kind == "csv":
        if not path:
            raise ScenarioError("density kind csv needs a path")
        return load_density(path, domain)
    p_raw = _get(section, "p", "2.0")
    p = np.inf if p_raw in ("inf", "Infinity") else float(p_raw)
    cells_raw = _get(section, "cells")
    box_raw = _get(section, "box")
    if cells_raw is None or box_raw is None:
        raise ScenarioError(f"density kind {kind!r} needs box and cells")
    cells = int(cells_raw)
    box = _float_list(box_raw)
    if len(box) != 2:
        raise ScenarioError("density box takes exactly [lo, hi] (same on every axis)")
    lo, hi = box
    params = _float_list(_get(section, "params", "") or "")
    if kind == "uniform":
        if len(params) != 1:
            raise ScenarioError("uniform density takes params = value")
        return uniform_density([lo] * dim, [hi] * dim, cells, params[0], p, domain)
    if kind == "gaussian":
        if len(params) != 1:
            raise ScenarioError("gaussian density takes params = sigma")
        center = [0.5 * (lo + hi)] * dim
        return gaussian_density([lo] * dim, [hi] * dim, cells, params[0], center, p, 1.0, domain)
    raise ScenarioError(f"unknown density kind {kind!r}")


def parse_scenario(path: str, *, seed: int = 42) -> tuple[Scenario, OutputOptions]:
    """Parse a scenario config file; raises ScenarioError on any defect."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ScenarioError(f"cannot read config {path!r}: {exc}") from exc
    except configparser.Error as exc:
        raise ScenarioError(f"malformed config {path!r}: {exc}") from exc

    for section in parser.sections():
        if section not in _ALLOWED_KEYS:
            raise ScenarioError(f"unknown config section [{section}]")
        extra = set(parser[section]) - _ALLOWED_KEYS[section]
        if extra:
            raise ScenarioError(
                f"unknown key(s) {sorted(extra)} in section [{section}]"
            )
    for section in _REQUIRED_SECTIONS:
        if section not in parser:
            raise ScenarioError(f"missing required config section [{section}]")

    try:
        sc = parser["scenario"]
        name = _get(sc, "name")
        if not name:
            raise ScenarioError("[scenario] needs a name")
        domain = _get(sc, "domain", EUCLIDEAN)
        dim = int(_get(sc, "dim", "1"))
        t0 = float(_get(sc, "t0", "0.0"))
        horizon_raw = _get(sc, "horizon")
        if horizon_raw is None:
            raise ScenarioError("[scenario] needs a horizon")
        horizon = float(horizon_raw)
        seed_raw = _get(sc, "seed")
        if seed_raw is not None:
            seed = int(seed_raw)

        fsec = parser["field"]
        fname = _get(fsec, "name")
        fparams = _float_list(_get(fsec, "params", "") or "")
        if fname == "zero":
            velocity = zero_field(dim)
        elif fname in FIELD_NAMES:
            velocity = builtin_field(fname, fparams, dim)
        else:
            raise ScenarioError(
                f"unknown field {fname!r}; expected zero or one of {FIELD_NAMES}"
            )
        if domain == TORUS and not velocity.torus_compatible:
            raise ScenarioError(f"field {fname!r} is not torus-compatible")

        rsec = parser["reaction"]
        rname = _get(rsec, "name")
        rparams = _float_list(_get(rsec, "params", "") or "")
        if rname not in REACTION_NAMES:
            raise ScenarioError(
                f"unknown reaction {rname!r}; expected one of {REACTION_NAMES}"
            )
        domain_volume = 1.0
        density = None
        if "density" in parser:
            density = _parse_density(parser["density"], domain, dim)
            widths = np.asarray(density.box_max, dtype=float) - np.asarray(
                density.box_min, dtype=float
            )
            domain_volume = float(np.prod(widths))
        reaction = builtin_reaction(rname, rparams, domain_volume=domain_volume)

        isec = parser["initial"]
        kind = _get(isec, "kind")
        if kind is None:
            raise ScenarioError("[initial] needs a kind")
        iparams = _float_list(_get(isec, "params", "") or "")
        initial = initial_measure(
            kind,
            iparams,
            dim,
            domain,
            path=_get(isec, "path"),
            density=density,
            seed=seed,
        )
        if initial.num_atoms and initial.dim != dim:
            raise ScenarioError(
                f"initial measure has dim {initial.dim}, scenario says {dim}"
            )

        solver_kwargs = {}
        if "solver" in parser:
            ssec = parser["solver"]
            for key in ("delta", "picard_tol", "dilation_c"):
                raw = _get(ssec, key)
                if raw is not None:
                    solver_kwargs[key] = float(raw)
            for key in ("quad_nodes", "picard_max_iter"):
                raw = _get(ssec, key)
                if raw is not None:
                    solver_kwargs[key] = int(raw)
            for key in ("flow_step_h", "tv_blowup_threshold", "max_interval_tau"):
                raw = _get(ssec, key)
                if raw is not None:
                    solver_kwargs[key] = float(raw)
            raw = _get(ssec, "dilation_mode")
            if raw is not None:
                solver_kwargs["dilation_mode"] = raw
        solver = SolverConfig(**solver_kwargs)

        snapshots = 11
        if "output" in parser:
            raw = _get(parser["output"], "snapshots")
            if raw is not None:
                snapshots = int(raw)

        scenario = Scenario(
            name=name,
            domain=domain,
            dim=dim,
            velocity=velocity,
            reaction=reaction,
            initial=initial,
            t0=t0,
            horizon=horizon,
            solver=solver,
            density=density,
        )
        return scenario, OutputOptions(snapshots=snapshots)
    except ScenarioError:
        raise
    except (ValueError, KeyError) as exc:
        raise ScenarioError(f"invalid config {path!r}: {exc}") from exc


# ---------------------------------------------------------------------------
# Bundled scenarios (the verification corpus).
#
# All multi-dimensional supports are kept small: the flat-norm LP on n
# atoms in >= 2 dimensions is the cost hot spot, while 1D instances use
# the exact chain solver and can be large.
# ---------------------------------------------------------------------------

def _ring_rotation() -> Scenario:
    return Scenario(
        name="ring_rotation",
        domain=EUCLIDEAN,
        dim=2,
        velocity=builtin_field("rotation2d", [np.pi / 2.0], 2),
        reaction=builtin_reaction("zero", []),
        initial=initial_measure("ring", [12, 0.5, 2.0], 2, EUCLIDEAN),
        t0=0.0,
        horizon=1.0,
        solver=SolverConfig(quad_nodes=17),
    )


def _death_shear() -> Scenario:
    pts = [[0.0, 0.3], [0.2, -0.1], [-0.3, 0.2], [0.1, 0.1]]
    wts = [0.5, 0.75, 0.25, 0.5]
    flat = [x for w, p in zip(wts, pts) for x in (w, *p)]
    return Scenario(
        name="death_shear",
        domain=EUCLIDEAN,
        dim=2,
        velocity=builtin_field("shear", [0.5], 2),
        reaction=builtin_reaction("death_rate", [1.0]),
        initial=initial_measure("diracs", flat, 2, EUCLIDEAN),
        t0=0.0,
        horizon=1.5,
        solver=SolverConfig(quad_nodes=17, dilation_mode="auto"),
    )


def _logistic_drift() -> Scenario:
    return Scenario(
        name="logistic_drift",
        domain=EUCLIDEAN,
        dim=1,
        velocity=builtin_field("constant", [0.3], 1),
        reaction=builtin_reaction("logistic", [1.0, 2.0]),
        initial=initial_measure(
            "diracs", [1.5, -0.5, 1.0, 0.0, 0.5, 0.4], 1, EUCLIDEAN
        ),
        t0=0.0,
        horizon=1.0,
        solver=SolverConfig(quad_nodes=33, dilation_mode="auto"),
    )


def _source_torus() -> Scenario:
    return Scenario(
        name="source_torus",
        domain=TORUS,
        dim=1,
        velocity=builtin_field("constant", [0.3], 1),
        reaction=builtin_reaction("smoothed_source", [0.5, 0.1, 0.5]),
        initial=initial_measure("diracs", [1.0, 0.25], 1, TORUS),
        t0=0.0,
        horizon=0.5,
        solver=SolverConfig(quad_nodes=17, dilation_mode="auto"),
    )


def _linear_mass() -> Scenario:
    return Scenario(
        name="linear_mass",
        domain=EUCLIDEAN,
        dim=1,
        velocity=zero_field(1),
        reaction=builtin_reaction("linear_rate", [2.0]),
        initial=initial_measure("diracs", [1.5, 0.2], 1, EUCLIDEAN),
        t0=0.0,
        horizon=0.5,
        solver=SolverConfig(quad_nodes=65, max_interval_tau=0.1),
    )


def _riccati_blowup() -> Scenario:
    m0 = 20.0
    return Scenario(
        name="riccati_blowup",
        domain=EUCLIDEAN,
        dim=1,
        velocity=zero_field(1),
        reaction=builtin_reaction("mass_rate", [1.0]),
        initial=initial_measure("diracs", [m0, 0.0], 1, EUCLIDEAN),
        t0=0.0,
        horizon=0.1,
        solver=SolverConfig(
            delta=20.0,
            quad_nodes=9,
            picard_tol=1e-9,
            tv_blowup_threshold=50.0 * m0,
        ),
    )


def _lp_rotation(cells: int = 48) -> Scenario:
    p = 2.0
    density = gaussian_density([-2.0, -2.0], [2.0, 2.0], cells, 0.5, [0.3, 0.0], p)
    return Scenario(
        name="lp_rotation",
        domain=EUCLIDEAN,
        dim=2,
        velocity=builtin_field("rotation2d", [1.0], 2),
        reaction=builtin_reaction("zero", []),
        initial=initial_measure("diracs", [1.0, 0.3, 0.0], 2, EUCLIDEAN),
        t0=0.0,
        horizon=0.8,
        solver=SolverConfig(quad_nodes=9),
        density=density,
    )


def _lp_contraction(cells: int = 256) -> Scenario:
    p = 2.0
    density = gaussian_density([-3.0], [3.0], cells, 0.6, [0.0], p)
    return Scenario(
        name="lp_contraction",
        domain=EUCLIDEAN,
        dim=1,
        velocity=builtin_field("linear", [-0.8], 1),
        reaction=builtin_reaction("zero", []),
        initial=quantize(density),
        t0=0.0,
        horizon=0.5,
        solver=SolverConfig(quad_nodes=9),
        density=density,
    )


def _lp_growth(cells: int = 256) -> Scenario:
    p = 2.0
    density = uniform_density([-1.0], [1.0], cells, 0.75, p)
    return Scenario(
        name="lp_growth",
        domain=EUCLIDEAN,
        dim=1,
        velocity=zero_field(1),
        reaction=builtin_reaction("linear_rate", [1.2], domain_volume=2.0),
        initial=quantize(density),
        t0=0.0,
        horizon=0.6,
        solver=SolverConfig(quad_nodes=33, max_interval_tau=0.15),
        density=density,
    )


BUNDLED_SCENARIOS = {
    "ring_rotation": _ring_rotation,
    "death_shear": _death_shear,
    "logistic_drift": _logistic_drift,
    "source_torus": _source_torus,
    "linear_mass": _linear_mass,
    "riccati_blowup": _riccati_blowup,
    "lp_rotation": _lp_rotation,
    "lp_contraction": _lp_contraction,
    "lp_growth": _lp_growth,
}


def bundled_scenario(name: str) -> Scenario:
    try:
        factory = BUNDLED_SCENARIOS[name]
    except KeyError:
        raise ScenarioError(
            f"unknown bundled scenario {name!r}; have {sorted(BUNDLED_SCENARIOS)}"
        ) from None
    return factory()
