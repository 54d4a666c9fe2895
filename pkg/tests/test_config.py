import numpy as np
import pytest

from splinefusion.config import (
    ScenarioConfig,
    collocated_positions,
    config_hash,
    dump_config,
    load_config,
    noncollocated_positions,
    save_config,
)
from splinefusion.errors import ConfigError


def test_defaults_describe_tapered_cantilever():
    cfg = ScenarioConfig()
    assert (cfg.geometry.length, cfg.geometry.h1, cfg.geometry.h2) == (1.65, 0.010, 0.001)
    assert cfg.geometry.youngs_modulus == 2.1e11 and cfg.geometry.density == 7850.0
    assert cfg.geometry.n_elements == 110
    assert (cfg.damping.zeta1, cfg.damping.zeta2) == (3.0, 4.0)
    assert (cfg.excitation.f0, cfg.excitation.f1, cfg.excitation.duration) == (3.0, 15.0, 40.0)
    assert cfg.basis.count == 7
    np.testing.assert_allclose(cfg.query_positions(), np.linspace(0, 1.65, 111))


def test_layout_helpers():
    acc, strain = collocated_positions(1.65)
    assert acc == strain and len(acc) == 8 and acc[-1] == 1.65
    acc, strain = noncollocated_positions(1.65)
    np.testing.assert_allclose(acc, 1.65 / 16 * np.arange(1, 16, 2))
    np.testing.assert_allclose(strain, 1.65 / 16 * np.arange(2, 17, 2))


def test_default_depths_are_half_local_thickness():
    cfg = ScenarioConfig()
    x = np.asarray(cfg.sensors.strain_positions)
    np.testing.assert_allclose(cfg.strain_depths(), 0.5 * (0.010 - 0.009 * x / 1.65))


def test_yaml_round_trip(tmp_path):
    acc, strain = noncollocated_positions()
    cfg = ScenarioConfig().replace(**{"sensors.accel_positions": acc,
                                      "sensors.strain_positions": strain,
                                      "filter.bc_variance_floor": 1e-16,
                                      "basis.m": 6})
    path = tmp_path / "c.yaml"
    save_config(cfg, path)
    back = load_config(path)
    assert back == cfg
    assert config_hash(back) == config_hash(cfg)
    assert dump_config(back) == dump_config(cfg)


def test_hash_changes_with_content():
    a = ScenarioConfig()
    assert a.digest() == ScenarioConfig().digest()
    assert a.replace(**{"sampling.seed": 1}).digest() != a.digest()


def test_scientific_notation_without_dot(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("filter:\n  bc_variance_floor: 1e-14\nsampling:\n  dt: 5e-3\n")
    cfg = load_config(path)
    assert cfg.filter.bc_variance_floor == 1e-14
    assert cfg.sampling.dt == 5e-3


def test_empty_file_gives_defaults(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("")
    assert load_config(path) == ScenarioConfig()


@pytest.mark.parametrize("text,field", [
    ("geometry:\n  h1: 0\n", "geometry.h1"),
    ("geometry:\n  h1: -0.01\n", "geometry.h1"),
    ("geometry:\n  thickness: 3\n", "geometry.thickness"),
    ("plot:\n  dpi: 3\n", "plot"),
    ("damping:\n  zeta1: -1\n", "damping.zeta1"),
    ("excitation:\n  type: step\n", "excitation.type"),
    ("excitation:\n  f0: 20\n", "excitation.f1"),
    ("sampling:\n  dt: fast\n", "sampling.dt"),
    ("sensors:\n  accel_positions: [0.1, 2.0]\n", "sensors.accel_positions[1]"),
    ("basis:\n  m: 9\n", "sensors"),
    ("basis:\n  degree: 1\n", "basis.degree"),
    ("filter:\n  r_strain: [1, 2]\n", "filter.r_strain"),
    ("query:\n  grid_count: 1\n", "query.grid_count"),
])
def test_invalid_fields_are_named(tmp_path, text, field):
    path = tmp_path / "c.yaml"
    path.write_text(text)
    with pytest.raises(ConfigError) as err:
        load_config(path)
    assert err.value.field == field
    assert str(err.value).startswith(field)


def test_yaml_syntax_error_reports_line(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("geometry:\n  h1: [0.01\nbasis: {}\n")
    with pytest.raises(ConfigError) as err:
        load_config(path)
    assert f"{path}:" in str(err.value)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.yaml")


def test_replace_unknown_key():
    with pytest.raises(ConfigError):
        ScenarioConfig().replace(**{"basis.knots": 3})
