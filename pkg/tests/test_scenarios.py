"""Scenario configs: INI parsing, initial data builders, bundled registry."""
import numpy as np
import pytest

from mvt.geometry import TORUS
from mvt.measures import save_measure, dirac
from mvt.scenarios import (
    BUNDLED_SCENARIOS,
    INITIAL_KINDS,
    OutputOptions,
    Scenario,
    ScenarioError,
    bundled_scenario,
    initial_measure,
    parse_scenario,
)

MINIMAL = """\
[scenario]
name = demo
dim = 1
horizon = 1.0

[field]
name = zero

[reaction]
name = zero

[initial]
kind = diracs
params = 1.0, 0.0
"""


def _write(tmp_path, text, name="sc.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_parse_minimal(tmp_path):
    scenario, output = parse_scenario(_write(tmp_path, MINIMAL))
    assert scenario.name == "demo"
    assert scenario.dim == 1 and scenario.horizon == 1.0 and scenario.t0 == 0.0
    assert scenario.initial.total_mass == 1.0
    assert output.snapshots == 11


def test_parse_bundled_config_files(tmp_path):
    import pathlib

    for cfg in sorted(pathlib.Path("configs").glob("*.ini")):
        scenario, output = parse_scenario(str(cfg))
        assert scenario.horizon > scenario.t0
        assert output.snapshots >= 2


def test_parse_rejects_unknown_section(tmp_path):
    with pytest.raises(ScenarioError, match="unknown config section"):
        parse_scenario(_write(tmp_path, MINIMAL + "\n[extra]\nx = 1\n"))


def test_parse_rejects_unknown_key(tmp_path):
    bad = MINIMAL.replace("dim = 1", "dim = 1\ncolour = red")
    with pytest.raises(ScenarioError, match="unknown key"):
        parse_scenario(_write(tmp_path, bad))


def test_parse_rejects_missing_section(tmp_path):
    bad = MINIMAL.replace("[reaction]\nname = zero\n", "")
    with pytest.raises(ScenarioError, match="missing required"):
        parse_scenario(_write(tmp_path, bad))


def test_parse_rejects_bad_names(tmp_path):
    with pytest.raises(ScenarioError, match="unknown field"):
        parse_scenario(_write(tmp_path, MINIMAL.replace("[field]\nname = zero", "[field]\nname = warp")))
    with pytest.raises(ScenarioError, match="unknown reaction"):
        parse_scenario(_write(tmp_path, MINIMAL.replace("[reaction]\nname = zero", "[reaction]\nname = fission")))


def test_parse_rejects_torus_incompatible_field(tmp_path):
    bad = MINIMAL.replace("dim = 1", "dim = 1\ndomain = torus").replace(
        "[field]\nname = zero", "[field]\nname = linear\nparams = 1.0"
    )
    with pytest.raises(ScenarioError, match="torus"):
        parse_scenario(_write(tmp_path, bad))


def test_parse_rejects_bad_horizon(tmp_path):
    with pytest.raises(ScenarioError):
        parse_scenario(_write(tmp_path, MINIMAL.replace("horizon = 1.0", "horizon = -1.0")))


def test_parse_missing_file():
    with pytest.raises(ScenarioError, match="cannot read"):
        parse_scenario("/nonexistent/path.ini")


def test_parse_solver_and_output_sections(tmp_path):
    text = MINIMAL + """
[solver]
quad_nodes = 17
picard_tol = 1e-9
dilation_mode = auto
max_interval_tau = 0.25

[output]
snapshots = 3
"""
    scenario, output = parse_scenario(_write(tmp_path, text))
    assert scenario.solver.quad_nodes == 17
    assert scenario.solver.picard_tol == 1e-9
    assert scenario.solver.dilation_mode == "auto"
    assert scenario.solver.max_interval_tau == 0.25
    assert output.snapshots == 3


def test_parse_seed_key_controls_random_cloud(tmp_path):
    base = MINIMAL.replace(
        "kind = diracs\nparams = 1.0, 0.0", "kind = random_cloud\nparams = 8, 0.5, 2.0"
    )
    s1, _ = parse_scenario(_write(tmp_path, base, "a.ini"))
    s2, _ = parse_scenario(_write(tmp_path, base, "b.ini"))
    np.testing.assert_array_equal(s1.initial.points, s2.initial.points)
    seeded = base.replace("dim = 1", "dim = 1\nseed = 7")
    s3, _ = parse_scenario(_write(tmp_path, seeded, "c.ini"))
    assert not np.array_equal(s1.initial.points, s3.initial.points)


def test_initial_kinds():
    assert set(INITIAL_KINDS) == {"diracs", "ring", "random_cloud", "csv", "grid"}
    mu = initial_measure("diracs", [1.0, 0.0, 0.5, 1.0], 1, "euclidean")
    assert mu.num_atoms == 2 and mu.total_mass == 1.5
    ring = initial_measure("ring", [12, 0.5, 2.0], 2, "euclidean")
    assert ring.num_atoms == 12
    assert ring.total_mass == pytest.approx(2.0)
    np.testing.assert_allclose(np.linalg.norm(ring.points, axis=1), 0.5, atol=1e-12)
    cloud = initial_measure("random_cloud", [6, 0.5, 1.0], 2, "euclidean", seed=3)
    assert cloud.num_atoms == 6 and cloud.total_mass == pytest.approx(1.0)


def test_initial_ring_requires_2d():
    with pytest.raises(ScenarioError):
        initial_measure("ring", [12, 0.5, 2.0], 1, "euclidean")


def test_initial_csv(tmp_path):
    path = tmp_path / "init.csv"
    save_measure(dirac(0.25, 2.0), str(path))
    mu = initial_measure("csv", [], 1, "euclidean", path=str(path))
    assert mu.total_mass == 2.0
    with pytest.raises(ScenarioError):
        initial_measure("csv", [], 1, "euclidean")


def test_initial_unknown_kind():
    with pytest.raises(ScenarioError):
        initial_measure("blob", [], 1, "euclidean")


def test_scenario_dataclass_validation():
    base = bundled_scenario("ring_rotation")
    with pytest.raises(ScenarioError):
        Scenario(
            name="bad",
            domain=base.domain,
            dim=base.dim,
            velocity=base.velocity,
            reaction=base.reaction,
            initial=base.initial,
            t0=1.0,
            horizon=1.0,
            solver=base.solver,
        )


def test_output_options_floor():
    with pytest.raises(ScenarioError):
        OutputOptions(snapshots=1)


def test_bundled_registry():
    assert set(BUNDLED_SCENARIOS) == {
        "ring_rotation",
        "death_shear",
        "logistic_drift",
        "source_torus",
        "linear_mass",
        "riccati_blowup",
        "lp_rotation",
        "lp_contraction",
        "lp_growth",
    }
    for name in BUNDLED_SCENARIOS:
        scenario = bundled_scenario(name)
        assert scenario.name == name
        assert scenario.horizon > scenario.t0
        assert scenario.initial.is_positive()
    with pytest.raises(ScenarioError):
        bundled_scenario("missing")


def test_density_section_gaussian(tmp_path):
    text = MINIMAL + """
[density]
kind = gaussian
box = -2.0, 2.0
cells = 64
p = 2.0
params = 0.5
"""
    scenario, _ = parse_scenario(_write(tmp_path, text))
    assert scenario.density is not None
    assert scenario.density.cells == 64
    from mvt.grids import mass

    assert mass(scenario.density) == pytest.approx(1.0, abs=1e-4)


def test_density_grid_initial_quantizes(tmp_path):
    text = MINIMAL.replace(
        "kind = diracs\nparams = 1.0, 0.0", "kind = grid"
    ) + """
[density]
kind = uniform
box = -1.0, 1.0
cells = 32
p = 2.0
params = 0.75
"""
    scenario, _ = parse_scenario(_write(tmp_path, text))
    assert scenario.initial.num_atoms == 32
    assert scenario.initial.total_mass == pytest.approx(1.5)


def test_grid_initial_without_density_section(tmp_path):
    text = MINIMAL.replace("kind = diracs\nparams = 1.0, 0.0", "kind = grid")
    with pytest.raises(ScenarioError):
        parse_scenario(_write(tmp_path, text))
