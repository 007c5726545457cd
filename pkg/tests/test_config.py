from pathlib import Path

import numpy as np
import pytest

from nbtomo.config import ConfigError, RunConfig

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.yaml")), ids=lambda p: p.stem)
def test_shipped_configs_validate(path):
    cfg = RunConfig.load(path)
    assert cfg.get("name")


def test_defaults_and_overrides():
    cfg = RunConfig.load(CONFIGS / "w_state_tomo.yaml")
    assert cfg.resolved()["workers"] == 1
    assert cfg.with_overrides(seed=99, workers=None).get("seed") == 99
    assert cfg.get("seed") == 7


def test_unknown_key_rejected():
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"name": "x", "bogus": 1})


def test_bad_enum_rejected():
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"name": "x", "policy": "guess"})


def test_builders():
    cfg = RunConfig.load(CONFIGS / "w_state_tomo.yaml")
    basis = cfg.basis()
    assert basis.rank == 4
    budget = cfg.budget()
    assert budget["epsilon"] == 0.02 and budget["delta"] == 0.001
    src = cfg.source()
    assert np.trace(src.rho).real == pytest.approx(1)


def test_yaml_text():
    cfg = RunConfig.from_yaml("name: t\nhilbert: {kind: qubits, m: 1}\ntarget: {kind: pauli_sum, terms: {Z: 1.0}}\n")
    op, tid, _ = cfg.target()
    assert np.allclose(op, np.diag([1, -1]))
