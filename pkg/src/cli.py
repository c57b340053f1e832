#!/usr/bin/env python3
# Copyright 2024 Canonical Ltd.
# See LICENSE file for licensing details.

"""Command-line entry point of the quantum-switch association simulator."""

import argparse
import logging
import sys
from collections.abc import Sequence

import pandas as pd
from pydantic import ValidationError

from core.structured_config import RunConfig
from events.sweep import SweepHandler
from events.verify import VerifyHandler
from literals import APP_KEY, LOG_FORMAT, DebugLevel, OutputFormat, Status
from managers.config import ConfigError, ConfigManager
from managers.harness import write_results
from managers.verification import SUITES, STABILITY_R_VALUES
from workload import FilesystemWorkload

logger = logging.getLogger(__name__)


def _int_list(value: str) -> list[int]:
    try:
        return [int(item) for item in value.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {value!r}")


def _name_list(value: str) -> list[str]:
    return [item.strip() for item in value.split(",") if item.strip()]


def _bool(value: str) -> bool:
    lowered = value.lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got {value!r}")


def build_parser() -> argparse.ArgumentParser:
    """The argument parser with the sweep, trial, verify and stability-check commands."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", default="results", help="output directory")
    common.add_argument(
        "--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"]
    )
    common.add_argument("--allow-relocation", type=_bool)

    algorithms = argparse.ArgumentParser(add_help=False)
    algorithms.add_argument("--algorithms", type=_name_list, help="e.g. rqsa,greedy")
    algorithms.add_argument("--optimal-rcap", type=int)
    algorithms.add_argument("--optimal-budget-secs", type=float)
    algorithms.add_argument("--objective", choices=["fidelity", "count"])

    parser = argparse.ArgumentParser(prog=APP_KEY, description=__doc__)
    commands = parser.add_subparsers(dest="command", required=True)

    sweep = commands.add_parser("sweep", parents=[common, algorithms], help="Monte Carlo sweep")
    sweep.add_argument("--seed", type=int, help="master seed of every scenario")
    sweep.add_argument("--seeds", type=int, help="trials per (scenario, R)")
    sweep.add_argument("--r-values", type=_int_list, help="e.g. 0,5,10")
    sweep.add_argument("--parallelism", type=int)
    sweep.add_argument("--format", choices=["csv", "json"])
    sweep.add_argument("--suite", choices=["default", "scalability"], default="default")

    trial = commands.add_parser("trial", parents=[common, algorithms], help="one trial")
    trial.add_argument("--seed", dest="trial_seed", type=int, required=True, help="trial seed")
    trial.add_argument("--r", type=int, required=True)

    verify = commands.add_parser("verify", parents=[common], help="property suites")
    verify.add_argument("--seed", type=int, help="seed of the suites' instance streams")
    verify.add_argument("--trials", type=int, help="cases per suite")
    verify.add_argument("--suite", choices=SUITES, action="append")

    stability = commands.add_parser(
        "stability-check", parents=[common], help="swap-stability oracle over RQSA outputs"
    )
    stability.add_argument("--r", dest="r_list", type=_int_list, default=list(STABILITY_R_VALUES))
    stability.add_argument("--seed", type=int, help="master seed of the scenario")
    stability.add_argument("--seeds", type=int)

    return parser


class QsaApp:
    """One CLI invocation: workload, managers and command handlers."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.workload = FilesystemWorkload(args.out)

        # HANDLERS

        self.sweep = SweepHandler(self)
        self.verify = VerifyHandler(self)

        # MANAGERS

        self.config_manager = ConfigManager(workload=self.workload, config_path=args.config)

    def load_config(self, args: argparse.Namespace) -> RunConfig:
        """The run configuration with every override given on the command line."""
        return self.config_manager.load(
            seed=getattr(args, "seed", None),
            allow_relocation=args.allow_relocation,
            **{
                name: getattr(args, name, None)
                for name in [
                    "seeds",
                    "r_values",
                    "algorithms",
                    "optimal_rcap",
                    "optimal_budget_secs",
                    "objective",
                    "parallelism",
                    "format",
                ]
            },
        )

    def write_results(self, raw: pd.DataFrame, fmt: OutputFormat, metadata: dict) -> pd.DataFrame:
        """Writes the result tables through the workload."""
        return write_results(self.workload, raw, fmt, metadata)

    def run(self) -> int:
        """Dispatches the command and returns its exit code."""
        commands = {
            "sweep": self.sweep.cmd_sweep,
            "trial": self.sweep.cmd_trial,
            "verify": self.verify.cmd_verify,
            "stability-check": self.verify.cmd_stability_check,
        }
        try:
            status = commands[self.args.command](self.args)
        except (ConfigError, ValidationError) as e:
            logger.error(f"Invalid configuration: {e}")
            status = Status.CONFIG_INVALID
        except OSError as e:
            logger.error(f"Cannot write to {self.workload.paths.out_dir}: {e}")
            status = Status.OUTPUT_UNWRITABLE

        return self._set_status(status)

    def _set_status(self, key: Status) -> int:
        """Logs the outcome at its level and returns its exit code."""
        log_level: DebugLevel = key.value.log_level

        getattr(logger, log_level.lower())(f"{self.args.command}: {key.value.message}")
        return key.value.exit_code


def main(argv: Sequence[str] | None = None) -> int:
    """Parses arguments, configures logging and runs one command."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format=LOG_FORMAT)
    return QsaApp(args).run()


if __name__ == "__main__":  # pragma: nocover
    sys.exit(main())
