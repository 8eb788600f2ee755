from __future__ import annotations

from pathlib import Path

import pytest

from leoplace.config import load_config
from leoplace.constellation import build_snapshot, build_walker_star
from leoplace.harness import run_experiment
from leoplace.scenario import generate_scenario

REPO = Path(__file__).resolve().parent.parent
CONFIG_DIR = REPO / "configs"


@pytest.fixture(scope="session")
def default_cfg():
    return load_config(CONFIG_DIR / "default.yaml")


@pytest.fixture(scope="session")
def default_scenario(default_cfg):
    return generate_scenario(default_cfg.master_seed, default_cfg.scenario)


@pytest.fixture(scope="session")
def default_elements(default_cfg):
    return build_walker_star(default_cfg.constellation)


@pytest.fixture(scope="session")
def default_snap0(default_cfg, default_scenario, default_elements):
    return build_snapshot(
        default_elements, default_cfg.constellation, 0, default_scenario.users()
    )


@pytest.fixture(scope="session")
def default_run(default_cfg):
    """Full reference experiment; shared because it dominates suite runtime."""
    return run_experiment(default_cfg, write_outputs=False)
