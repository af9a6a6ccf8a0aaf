import json
from pathlib import Path

import pytest

from tidalnoise.config import build, default_config, load_config, resolve
from tidalnoise.flowdata import FlowSeries

ROOT = Path(__file__).resolve().parent.parent
CONFIGS = ROOT / "configs"
BASELINE = CONFIGS / "baseline.json"


def constant_flow(u=2.0, ti=0.10, seconds=40, dt=1.0):
    n = int(round(seconds / dt)) + 1
    return FlowSeries.from_arrays([i * dt for i in range(n)], [u] * n, ti)


def make_config(**raw):
    """ScenarioConfig from keyword sections merged onto the packaged defaults."""
    raw.setdefault("flow", {"synth": {"u_mean": 2.0, "u_amp": 0.0, "ti": 0.1, "dt": 1.0, "duration": 41.0}})
    resolved, applied = resolve(raw)
    return build(resolved, applied)


@pytest.fixture(scope="session")
def defaults():
    return default_config()


@pytest.fixture(scope="session")
def base_cfg():
    return make_config()


@pytest.fixture(scope="session")
def plant(base_cfg):
    return base_cfg.plant


@pytest.fixture(scope="session")
def rotor(plant):
    return plant.rotor


@pytest.fixture(scope="session")
def acoustics_cfg(base_cfg):
    return base_cfg.acoustics


@pytest.fixture(scope="session")
def baseline_cfg():
    cfg, _ = load_config(BASELINE)
    return cfg


@pytest.fixture
def write_json(tmp_path):
    def _write(obj, name="cfg.json"):
        p = tmp_path / name
        p.write_text(json.dumps(obj))
        return p
    return _write
