#!/usr/bin/env python3
# Copyright 2024 Canonical Ltd.
# See LICENSE file for licensing details.

"""VerifyHandler class and methods."""

import argparse
import logging
from typing import TYPE_CHECKING

from literals import Status
from managers.verification import SUITES, SuiteResult, run_suites, stability_suite

if TYPE_CHECKING:
    from cli import QsaApp

logger = logging.getLogger(__name__)


def _report(result: SuiteResult) -> str:
    line = f"{'PASS' if result.passed else 'FAIL'} {result.name} ({result.cases} cases)"
    if result.witness:
        line += f": {result.witness}"
    return line


class VerifyHandler:
    """Implements the `verify` and `stability-check` commands."""

    def __init__(self, app: "QsaApp") -> None:
        self.app = app

    def cmd_verify(self, args: argparse.Namespace) -> Status:
        """Runs the property suites; fails if any suite fails."""
        config = self.app.load_config(args)
        results = run_suites(
            names=args.suite or SUITES,
            cases=args.trials,
            seed=config.scenario.seed,
            config=config.matching,
            scenario=config.scenario,
        )
        for result in results:
            print(_report(result))

        if all(result.passed for result in results):
            return Status.OK
        return Status.SUITE_FAILED

    def cmd_stability_check(self, args: argparse.Namespace) -> Status:
        """Checks RQSA outputs for swap stability over the given R values and seeds."""
        config = self.app.load_config(args)
        result = stability_suite(
            cases=config.sweep.trials,
            r_values=args.r_list,
            scenario=config.scenario,
            config=config.matching,
        )
        print(_report(result))
        return Status.OK if result.passed else Status.UNSTABLE
