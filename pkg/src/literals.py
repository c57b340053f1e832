#!/usr/bin/env python3
# Copyright 2024 Canonical Ltd.
# See LICENSE file for licensing details.

"""Collection of globals common to the quantum-switch association simulator."""

from dataclasses import dataclass
from enum import Enum
from typing import Literal

APP_KEY = "qsa"
VERSION = "1.0"
LOG_FORMAT = "%(asctime)s [%(levelname)s] [%(name)s] %(message)s"

# -- Fidelity calculus --

FIDELITY_MIN = 0.25
FIDELITY_MAX = 1.0
FIDELITY_TOL = 1e-12

# utilized link-level EPR pairs per action j = 1..4
ALPHA_TX = (1, 2, 1, 2)
ALPHA_RX = (1, 1, 2, 2)

# -- Default scenario --

DEFAULT_K = 5
DEFAULT_M = 5
DEFAULT_Q = 3
DEFAULT_N = 10
DEFAULT_L0_KM = 0.54
DEFAULT_DIST_RANGE_KM = (0.1, 1.0)
DEFAULT_FMIN_RANGE = (0.5, 0.8)
DEFAULT_LINK_FID_RANGE = (0.83, 0.99)
DEFAULT_SEED = 0

# -- Matching / solvers --

UTILITY_EPS = 1e-9
SEARCH_EPS = 1e-12
MAX_PASSES_CAP = 10_000
EXHAUSTIVE_P1_BELOW = 5
DEADLINE_CHECK_EVERY = 256

# -- Harness --

DEFAULT_R_VALUES = tuple(range(0, 41, 5))
DEFAULT_TRIALS = 100
DEFAULT_OPTIMAL_RCAP = 16
DEFAULT_OPTIMAL_BUDGET_SECS = 60.0

# (K, M) shapes at Q=3 covering K>M, K=M and K<M; the exact sizes are assumed
SCALABILITY_SHAPES = ((3, 5), (5, 5), (5, 3))

RAW_COLUMNS = [
    "seed",
    "scenario",
    "K",
    "M",
    "Q",
    "R",
    "algorithm",
    "served_fraction",
    "total_fidelity",
    "swap_count",
    "runtime_ms",
    "optimal_proven",
    "instance_fingerprint",
]
AGGREGATE_COLUMNS = [
    "scenario",
    "R",
    "algorithm",
    "mean_served",
    "se_served",
    "mean_fidelity",
    "se_fidelity",
    "n_trials",
]

PATHS = {
    "RAW": "raw",
    "AGGREGATE": "aggregate",
    "METADATA": "metadata.json",
    "CONFIG": "config.json",
}

AlgorithmName = Literal["rqsa", "greedy", "random", "optimal"]
ALGORITHMS: tuple[AlgorithmName, ...] = ("rqsa", "greedy", "random", "optimal")
Objective = Literal["fidelity", "count"]
OutputFormat = Literal["csv", "json"]
DebugLevel = Literal["DEBUG", "INFO", "WARNING", "ERROR"]
OptimalMarker = Literal["true", "false", "skipped", ""]


@dataclass
class StatusLevel:
    """Status object helper."""

    exit_code: int
    log_level: DebugLevel
    message: str


class Status(Enum):
    """Collection of possible outcomes for a CLI command."""

    OK = StatusLevel(0, "DEBUG", "command completed")
    SUITE_FAILED = StatusLevel(1, "ERROR", "one or more verification suites failed")
    UNSTABLE = StatusLevel(1, "ERROR", "swap-stability check found a beneficial swap")
    CONFIG_INVALID = StatusLevel(2, "ERROR", "configuration is malformed or invalid")
    OUTPUT_UNWRITABLE = StatusLevel(3, "ERROR", "output directory is not writable")
