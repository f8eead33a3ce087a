"""Run configuration parsing, field-path errors and file round trips."""

import copy
import json
from pathlib import Path

import pytest
import sympy as sp

from estimates.errors import ConfigError
from estimates.geometry import GeometryKind
from report.config import RunConfig

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

BASE = {
    "geometry": {"kind": "FlatTorus1D", "num_points": 32, "extent": 1.0},
    "solver": {"p": 2, "dt_max": 1e-3, "snapshot_interval": 0.1, "t_end": 0.2},
    "initial": {"kind": "constant", "value": 1},
    "pairs": [{"alpha": 1, "beta": "1/2"}],
}


def _with(section: str, key: str, value) -> dict:
    payload = copy.deepcopy(BASE)
    if section == "pairs":
        payload["pairs"][0][key] = value
    else:
        payload[section][key] = value
    return payload


@pytest.mark.parametrize("name", ["trivial_p2.json", "liyau_torus_p15.json", "sphere_convexity_n5.yaml"])
def test_bundled_configs_load(name) -> None:
    config = RunConfig.load(str(CONFIGS / name))

    assert config.pairs
    assert config.output.prefix.startswith("out/")
    assert config.initial_data().min() > 0


def test_rational_pair_stays_exact() -> None:
    config = RunConfig.load(str(CONFIGS / "trivial_p2.json"))

    assert config.pairs[0].beta == sp.Rational(1, 2)
    assert config.checks.decay and config.checks.blowup
    assert config.to_dict()["pairs"][0]["beta"] == "1/2"


def test_sphere_config_defaults_extent() -> None:
    config = RunConfig.load(str(CONFIGS / "sphere_convexity_n5.yaml"))

    assert config.geometry.kind is GeometryKind.RADIAL_SPHERE
    assert config.checks.convexity is True
    assert "**S^5**" in config.notes


@pytest.mark.parametrize(
    "section, key, value, field",
    [
        ("solver", "p", -1, "solver.p"),
        ("pairs", "beta", 1.5, "pairs[0].beta"),
        ("solver", "speed", 3, "solver.speed"),
        ("geometry", "kind", "Cylinder", "geometry.kind"),
        ("solver", "dt_max", "fast", "solver.dt_max"),
    ],
)
def test_error_names_the_field(section, key, value, field) -> None:
    with pytest.raises(ConfigError) as excinfo:
        RunConfig.from_dict(_with(section, key, value))

    assert excinfo.value.field == field
    assert str(excinfo.value).startswith(f"{field}: ")


def test_amplitude_must_keep_data_positive() -> None:
    payload = copy.deepcopy(BASE)
    payload["initial"] = {"kind": "sinusoidal", "value": 1, "amplitude": 1.5}

    with pytest.raises(ConfigError) as excinfo:
        RunConfig.from_dict(payload)
    assert excinfo.value.field == "initial.amplitude"


def test_cutoff_must_exceed_initial_maximum() -> None:
    payload = _with("solver", "blowup_cutoff", 5)
    payload["initial"]["value"] = 10

    with pytest.raises(ConfigError) as excinfo:
        RunConfig.from_dict(payload)
    assert excinfo.value.field == "solver.blowup_cutoff"


def test_json_syntax_error_reports_line(tmp_path) -> None:
    path = tmp_path / "broken.json"
    path.write_text('{\n  "geometry": {"kind": "FlatTorus1D",\n  "solver": }\n}\n', encoding="utf-8")

    with pytest.raises(ConfigError) as excinfo:
        RunConfig.load(str(path))
    assert excinfo.value.line == 3
    assert str(excinfo.value).startswith("line 3: ")


def test_yaml_syntax_error_reports_line(tmp_path) -> None:
    path = tmp_path / "broken.yaml"
    path.write_text("geometry:\n  kind: FlatTorus1D\n  extent: [1, 2\nsolver: {}\n", encoding="utf-8")

    with pytest.raises(ConfigError) as excinfo:
        RunConfig.load(str(path))
    assert excinfo.value.line is not None


def test_missing_file_is_a_config_error(tmp_path) -> None:
    with pytest.raises(ConfigError):
        RunConfig.load(str(tmp_path / "absent.json"))


@pytest.mark.parametrize("suffix", [".yaml", ".json"])
def test_save_and_load_round_trip(tmp_path, suffix) -> None:
    config = RunConfig.from_dict(copy.deepcopy(BASE))
    path = tmp_path / f"run{suffix}"
    config.save(str(path))
    loaded = RunConfig.load(str(path))

    assert loaded.geometry == config.geometry
    assert loaded.pairs == config.pairs
    assert loaded.solver.t_end == config.solver.t_end
    if suffix == ".json":
        assert json.loads(path.read_text(encoding="utf-8"))["pairs"][0]["beta"] == "1/2"


def test_talenti_profile_initial_data() -> None:
    payload = copy.deepcopy(BASE)
    payload["geometry"] = {"kind": "RadialEuclidean", "n": 6, "num_points": 21, "extent": 10}
    payload["initial"] = {"kind": "profile", "profile": "talenti"}
    payload["solver"]["blowup_cutoff"] = 1e8

    u0 = RunConfig.from_dict(payload).initial_data()
    assert u0[0] == pytest.approx(24.0)
