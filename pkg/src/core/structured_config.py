#!/usr/bin/env python3
# Copyright 2024 Canonical Ltd.
# See LICENSE file for licensing details.

"""Structured configuration for scenarios, matching and sweeps."""

import logging

from pydantic import BaseModel, Extra, Field, root_validator, validator

from literals import (
    ALGORITHMS,
    DEFAULT_DIST_RANGE_KM,
    DEFAULT_FMIN_RANGE,
    DEFAULT_K,
    DEFAULT_L0_KM,
    DEFAULT_LINK_FID_RANGE,
    DEFAULT_M,
    DEFAULT_N,
    DEFAULT_OPTIMAL_BUDGET_SECS,
    DEFAULT_OPTIMAL_RCAP,
    DEFAULT_Q,
    DEFAULT_R_VALUES,
    DEFAULT_SEED,
    DEFAULT_TRIALS,
    FIDELITY_MAX,
    FIDELITY_MIN,
    MAX_PASSES_CAP,
    AlgorithmName,
    Objective,
    OutputFormat,
)

logger = logging.getLogger(__name__)


class BaseConfigModel(BaseModel):
    """Class to be used for defining the structured configuration options."""

    class Config:
        extra = Extra.forbid
        allow_population_by_field_name = True
        validate_assignment = True

    def __getitem__(self, x):
        """Return the item using the notation instance[key]."""
        return getattr(self, x.replace("-", "_"))


class ScenarioParams(BaseConfigModel):
    """Network geometry and sampling distributions of one scenario."""

    name: str | None = None
    k: int = Field(DEFAULT_K, alias="K", ge=1)
    m: int = Field(DEFAULT_M, alias="M", ge=1)
    q: int = Field(DEFAULT_Q, alias="Q", ge=1)
    n: int = Field(DEFAULT_N, ge=1)
    l0_km: float = Field(DEFAULT_L0_KM, alias="L0_km", gt=0)
    dist_min_km: float = Field(DEFAULT_DIST_RANGE_KM[0], gt=0)
    dist_max_km: float = Field(DEFAULT_DIST_RANGE_KM[1], gt=0)
    fmin_low: float = Field(DEFAULT_FMIN_RANGE[0], ge=FIDELITY_MIN, le=FIDELITY_MAX)
    fmin_high: float = Field(DEFAULT_FMIN_RANGE[1], ge=FIDELITY_MIN, le=FIDELITY_MAX)
    link_fid_low: float = Field(DEFAULT_LINK_FID_RANGE[0], ge=FIDELITY_MIN, le=FIDELITY_MAX)
    link_fid_high: float = Field(DEFAULT_LINK_FID_RANGE[1], ge=FIDELITY_MIN, le=FIDELITY_MAX)
    seed: int = Field(DEFAULT_SEED, ge=0)
    shared_fmin: bool = True
    tx_weights: list[float] | None = None
    rx_weights: list[float] | None = None

    @root_validator(skip_on_failure=True)
    def ranges_ordered(cls, values: dict) -> dict:
        """Check every uniform support is a non-empty interval."""
        for low, high in [
            ("dist_min_km", "dist_max_km"),
            ("fmin_low", "fmin_high"),
            ("link_fid_low", "link_fid_high"),
        ]:
            if values[low] > values[high]:
                raise ValueError(f"{low}={values[low]} greater than {high}={values[high]}")
        return values

    @root_validator(skip_on_failure=True)
    def weights_match_nodes(cls, values: dict) -> dict:
        """Check optional endpoint weights cover every node and are non-degenerate."""
        for key, count in [("tx_weights", values["k"]), ("rx_weights", values["m"])]:
            weights = values.get(key)
            if weights is None:
                continue
            if len(weights) != count:
                raise ValueError(f"{key} has {len(weights)} entries, expected {count}")
            if any(w < 0 for w in weights) or sum(weights) <= 0:
                raise ValueError(f"{key} must be non-negative with a positive sum")
        return values

    @property
    def scenario_id(self) -> str:
        """Label used in result tables."""
        return self.name or f"K{self.k}-M{self.m}-Q{self.q}"


class MatchConfig(BaseConfigModel):
    """Options of the RQSA swap phase."""

    allow_relocation: bool = True
    strict_all: bool = False
    max_passes: int | None = Field(None, ge=1)

    @property
    def pass_limit(self) -> int:
        """Effective number of passes before the safety cap stops the swap phase."""
        return min(self.max_passes or MAX_PASSES_CAP, MAX_PASSES_CAP)


class SweepSpec(BaseConfigModel):
    """Monte Carlo sweep over scenarios, request counts and seeds."""

    # empty means "the run's base scenario only"
    scenarios: list[ScenarioParams] = Field(default_factory=list)
    r_values: list[int] = Field(default_factory=lambda: list(DEFAULT_R_VALUES))
    trials: int = Field(DEFAULT_TRIALS, ge=1)
    algorithms: list[AlgorithmName] = Field(default_factory=lambda: list(ALGORITHMS))
    optimal_rcap: int = Field(DEFAULT_OPTIMAL_RCAP, ge=0)
    optimal_budget_secs: float = Field(DEFAULT_OPTIMAL_BUDGET_SECS, gt=0)
    objective: Objective = "fidelity"
    parallelism: int = Field(1, ge=1)
    record_runtime: bool = False
    format: OutputFormat = "csv"

    @validator("r_values", each_item=True)
    def r_non_negative(cls, value: int) -> int:
        """Request counts cannot be negative."""
        if value < 0:
            raise ValueError(f"R value {value} is negative")
        return value

    @validator("algorithms")
    def algorithms_unique(cls, value: list[AlgorithmName]) -> list[AlgorithmName]:
        """Drops duplicates and orders algorithms canonically."""
        if not value:
            raise ValueError("at least one algorithm is required")
        return [name for name in ALGORITHMS if name in value]


class RunConfig(BaseConfigModel):
    """The single JSON document accepted by the CLI."""

    scenario: ScenarioParams = Field(default_factory=ScenarioParams)
    sweep: SweepSpec = Field(default_factory=SweepSpec)
    matching: MatchConfig = Field(default_factory=MatchConfig)
