#!/usr/bin/env python3
# Copyright 2024 Canonical Ltd.
# See LICENSE file for licensing details.

"""SweepHandler class and methods."""

import argparse
import logging
from typing import TYPE_CHECKING

from literals import Status
from managers.harness import (
    raw_table,
    run_metadata,
    run_sweep,
    run_trial,
    scalability_spec,
    scalability_suite,
)

if TYPE_CHECKING:
    from cli import QsaApp

logger = logging.getLogger(__name__)


class SweepHandler:
    """Implements the `sweep` and `trial` commands."""

    def __init__(self, app: "QsaApp") -> None:
        self.app = app

    def cmd_sweep(self, args: argparse.Namespace) -> Status:
        """Runs a Monte Carlo sweep and writes raw, aggregate, metadata and config files."""
        config = self.app.load_config(args)
        spec = config.sweep

        # fail on an unwritable directory before spending time on trials
        self.app.workload.ensure_dir()
        self.app.config_manager.generate_config(config)

        if args.suite == "scalability":
            raw = scalability_suite(spec, config.scenario, config.matching)
            spec = scalability_spec(spec, config.scenario)
        else:
            raw = run_sweep(spec, config.scenario, config.matching)

        table = self.app.write_results(raw, spec.format, run_metadata(spec, config.scenario))
        print(table.to_string(index=False))
        return Status.OK

    def cmd_trial(self, args: argparse.Namespace) -> Status:
        """Runs every configured algorithm on one trial seed and prints its rows."""
        config = self.app.load_config(args)
        rows = run_trial(
            config.scenario,
            args.r,
            args.trial_seed,
            sweep=config.sweep,
            matching=config.matching,
        )
        logger.info(f"Trial seed {args.trial_seed}, R={args.r}: {len(rows)} rows")
        print(raw_table(rows).to_string(index=False))
        return Status.OK
