#!/usr/bin/env python3
# Copyright 2024 Canonical Ltd.
# See LICENSE file for licensing details.

import json

import pytest
from pydantic import ValidationError

from core.structured_config import MatchConfig, RunConfig, ScenarioParams, SweepSpec
from literals import ALGORITHMS, DEFAULT_R_VALUES, MAX_PASSES_CAP
from managers.config import ConfigError, ConfigManager
from workload import FilesystemWorkload


@pytest.fixture
def workload(tmp_path) -> FilesystemWorkload:
    return FilesystemWorkload(str(tmp_path / "out"))


@pytest.fixture
def config_file(tmp_path):
    def _write(content) -> str:
        path = tmp_path / "config.json"
        path.write_text(content if isinstance(content, str) else json.dumps(content))
        return str(path)

    return _write


def test_defaults_without_file(workload):
    """Checks a run without a config file uses the documented defaults."""
    config = ConfigManager(workload).load()

    assert (config.scenario.k, config.scenario.m, config.scenario.q) == (5, 5, 3)
    assert config.scenario.n == 10 and config.scenario.l0_km == 0.54
    assert config.sweep.r_values == list(DEFAULT_R_VALUES)
    assert config.sweep.trials == 100
    assert config.sweep.algorithms == list(ALGORITHMS)
    assert config.matching.allow_relocation


def test_aliases_and_field_names(workload, config_file):
    """Checks scenario sizes are accepted under both spellings."""
    path = config_file({"scenario": {"K": 3, "q": 2, "L0_km": 0.3}})
    config = ConfigManager(workload, path).load()

    assert (config.scenario.k, config.scenario.q, config.scenario.l0_km) == (3, 2, 0.3)


def test_unknown_key_rejected(workload, config_file):
    path = config_file({"sweep": {"trails": 3}})
    with pytest.raises(ValidationError):
        ConfigManager(workload, path).load()


@pytest.mark.parametrize("content", ["{not json", "[1, 2]", ""])
def test_unreadable_files(workload, config_file, content):
    with pytest.raises(ConfigError):
        ConfigManager(workload, config_file(content)).load()


def test_missing_file(workload, tmp_path):
    with pytest.raises(ConfigError):
        ConfigManager(workload, str(tmp_path / "absent.json")).load()


def test_overrides_win_over_file(workload, config_file):
    """Checks CLI overrides replace file values and None leaves them alone."""
    path = config_file({"sweep": {"trials": 7, "r_values": [1]}, "scenario": {"seed": 3}})
    config = ConfigManager(workload, path).load(
        seeds=2, r_values=None, allow_relocation=False, algorithms=["greedy"]
    )

    assert config.sweep.trials == 2
    assert config.sweep.r_values == [1]
    assert config.sweep.algorithms == ["greedy"]
    assert not config.matching.allow_relocation
    assert config.scenario.seed == 3


def test_seed_override_reaches_sweep_scenarios(workload, config_file):
    path = config_file({"sweep": {"scenarios": [{"K": 2}, {"M": 2}]}})
    config = ConfigManager(workload, path).load(seed=11)

    assert config.scenario.seed == 11
    assert [s.seed for s in config.sweep.scenarios] == [11, 11]


def test_unknown_override(workload):
    with pytest.raises(ConfigError):
        ConfigManager(workload).load(colour="blue")


def test_override_values_are_validated(workload):
    with pytest.raises(ValidationError):
        ConfigManager(workload).load(seeds=0)


def test_generate_config_writes_aliases(mocker, workload):
    """Checks the effective config is rendered with aliases and sorted keys."""
    write = mocker.patch.object(workload, "write")
    manager = ConfigManager(workload)

    manager.generate_config(manager.load(seed=5))

    content = write.call_args.kwargs["content"]
    assert write.call_args.kwargs["path"] == workload.paths.config
    rendered = json.loads(content)
    assert rendered["scenario"]["K"] == 5 and rendered["scenario"]["seed"] == 5
    assert RunConfig.parse_obj(rendered) == manager.load(seed=5)


@pytest.mark.parametrize(
    "params",
    [
        {"dist_min_km": 2.0, "dist_max_km": 1.0},
        {"fmin_low": 0.9, "fmin_high": 0.6},
        {"link_fid_low": 0.2},
        {"K": 0},
        {"K": 2, "tx_weights": [1.0]},
        {"M": 2, "rx_weights": [0.0, 0.0]},
        {"seed": -1},
    ],
)
def test_scenario_validators(params):
    with pytest.raises(ValidationError):
        ScenarioParams(**params)


@pytest.mark.parametrize(
    "params", [{"r_values": [5, -1]}, {"algorithms": []}, {"trials": 0}, {"objective": "max"}]
)
def test_sweep_validators(params):
    with pytest.raises(ValidationError):
        SweepSpec(**params)


def test_algorithms_are_canonicalised():
    spec = SweepSpec(algorithms=["optimal", "greedy", "optimal", "rqsa"])
    assert spec.algorithms == ["rqsa", "greedy", "optimal"]


def test_scenario_ids():
    assert ScenarioParams().scenario_id == "K5-M5-Q3"
    assert ScenarioParams(name="dense").scenario_id == "dense"


def test_pass_limit_is_capped():
    assert MatchConfig().pass_limit == MAX_PASSES_CAP
    assert MatchConfig(max_passes=3).pass_limit == 3
    assert MatchConfig(max_passes=10 * MAX_PASSES_CAP).pass_limit == MAX_PASSES_CAP


def test_config_items_by_dashed_key():
    assert ScenarioParams()["shared-fmin"] is True
