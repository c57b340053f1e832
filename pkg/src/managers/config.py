#!/usr/bin/env python3
# Copyright 2024 Canonical Ltd.
# See LICENSE file for licensing details.

"""Supporting objects for run configuration file management."""

import json
import logging
from typing import Any

from core.structured_config import RunConfig
from core.workload import WorkloadBase

logger = logging.getLogger(__name__)

# CLI override name -> (section, field)
OVERRIDES = {
    "seeds": ("sweep", "trials"),
    "r_values": ("sweep", "r_values"),
    "algorithms": ("sweep", "algorithms"),
    "optimal_rcap": ("sweep", "optimal_rcap"),
    "optimal_budget_secs": ("sweep", "optimal_budget_secs"),
    "objective": ("sweep", "objective"),
    "parallelism": ("sweep", "parallelism"),
    "format": ("sweep", "format"),
    "allow_relocation": ("matching", "allow_relocation"),
}


class ConfigError(ValueError):
    """Raised when a configuration file is missing or not a JSON object."""


class ConfigManager:
    """Object for loading, overriding and rendering the run configuration."""

    def __init__(self, workload: WorkloadBase, config_path: str | None = None) -> None:
        self.workload = workload
        self.config_path = config_path

    @property
    def parsed_confile(self) -> dict:
        """Return the config file parsed as a dict, empty without a file."""
        if not self.config_path:
            return {}

        raw_file = self.workload.read(self.config_path)
        if not raw_file:
            raise ConfigError(f"config file {self.config_path} is missing or empty")

        try:
            content = json.loads("\n".join(raw_file))
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file {self.config_path} is not valid JSON: {e}")

        if not isinstance(content, dict):
            raise ConfigError(f"config file {self.config_path} must hold a JSON object")
        return content

    def load(self, **overrides: Any) -> RunConfig:
        """The validated configuration with CLI overrides applied.

        Overrides set to None are ignored; `seed` replaces the master seed of the base
        scenario and of every sweep scenario.

        Raises:
            ConfigError: on an unreadable file
            pydantic.ValidationError: on unknown keys or invalid values
        """
        config = RunConfig.parse_obj(self.parsed_confile).dict()

        for name, value in overrides.items():
            if value is None:
                continue
            if name == "seed":
                config["scenario"]["seed"] = value
                for scenario in config["sweep"]["scenarios"]:
                    scenario["seed"] = value
            elif name in OVERRIDES:
                section, field = OVERRIDES[name]
                config[section][field] = value
            else:
                raise ConfigError(f"unknown override {name}")

        return RunConfig.parse_obj(config)

    def generate_config(self, config: RunConfig) -> None:
        """Render the effective config file into the output directory."""
        json_str = config.json(by_alias=True, indent=2, sort_keys=True)
        self.workload.write(content=json_str, path=self.workload.paths.config)
        logger.debug(f"Rendered effective config to {self.workload.paths.config}")
