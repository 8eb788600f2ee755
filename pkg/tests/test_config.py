"""Config loading: strict key handling, defaults, and method parsing."""

from __future__ import annotations

import pytest
import yaml

from conftest import CONFIG_DIR
from leoplace.config import (
    ConfigError,
    ExperimentConfig,
    config_from_dict,
    default_methods,
    load_config,
)


def test_load_default_config():
    cfg = load_config(CONFIG_DIR / "default.yaml")
    assert cfg.master_seed == 42
    assert cfg.constellation.num_planes == 4
    assert cfg.constellation.sats_per_plane == 15
    assert cfg.constellation.num_epochs == 15
    assert cfg.scenario.num_slices == 5
    assert cfg.scenario.users_per_slice == 10
    assert [m.name for m in cfg.methods] == [
        "hybrid",
        "cpu_only",
        "cpu_mig",
        "greedy_only",
    ]


def test_method_weights_parsed():
    cfg = load_config(CONFIG_DIR / "default.yaml")
    by_name = {m.name: m for m in cfg.methods}
    assert by_name["hybrid"].kind == "hybrid"
    assert by_name["hybrid"].weights == (0.3, 0.5, 0.2)
    assert by_name["cpu_only"].weights == (1.0, 0.0, 0.0)
    assert by_name["greedy_only"].kind == "greedy"


def test_default_methods_roster():
    names = [m.name for m in default_methods()]
    assert names == ["hybrid", "cpu_only", "cpu_mig", "greedy_only"]


def test_empty_dict_gives_defaults():
    cfg = config_from_dict({})
    assert isinstance(cfg, ExperimentConfig)
    assert cfg.master_seed == 42
    assert cfg.solver.sa_iterations == 50000
    assert cfg.solver.bnb_gap == 0.005


def test_unknown_top_level_key_rejected():
    with pytest.raises(ConfigError, match="undersea"):
        config_from_dict({"undersea": 1})


def test_unknown_nested_key_rejected():
    with pytest.raises(ConfigError, match="constellation.*warp"):
        config_from_dict({"constellation": {"warp": 9}})


def test_bad_type_rejected():
    with pytest.raises(ConfigError, match="num_planes"):
        config_from_dict({"constellation": {"num_planes": "four"}})


def test_bad_weights_length_rejected():
    with pytest.raises(ConfigError):
        config_from_dict(
            {"methods": [{"name": "m", "kind": "hybrid", "weights": [1.0]}]}
        )


def test_bad_method_kind_rejected():
    with pytest.raises(ConfigError):
        config_from_dict({"methods": [{"name": "m", "kind": "psychic"}]})


def test_missing_file_raises():
    with pytest.raises(ConfigError):
        load_config(CONFIG_DIR / "does_not_exist.yaml")


def test_solver_param_builders():
    cfg = load_config(CONFIG_DIR / "smoke.yaml")
    sa = cfg.solver.sa_params(seed=7)
    assert sa.seed == 7
    assert sa.iterations == 2000
    bnb = cfg.solver.bnb_params()
    assert bnb.node_budget == 1500
    assert bnb.gap == 0.005


def test_tiny_config_disables_budgets():
    cfg = load_config(CONFIG_DIR / "tiny.yaml")
    bnb = cfg.solver.bnb_params()
    assert bnb.gap == 0.0
    assert bnb.node_budget is None
    assert bnb.time_budget_ms is None


def test_yaml_scalar_round_trip(tmp_path):
    base = yaml.safe_load((CONFIG_DIR / "smoke.yaml").read_text())
    base["master_seed"] = 1234
    p = tmp_path / "alt.yaml"
    p.write_text(yaml.safe_dump(base))
    cfg = load_config(p)
    assert cfg.master_seed == 1234
