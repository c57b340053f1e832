#!/usr/bin/env python3
# Copyright 2024 Canonical Ltd.
# See LICENSE file for licensing details.

"""Supporting objects for reading configuration and writing results."""

import os
from abc import ABC, abstractmethod

from literals import PATHS, OutputFormat


class ResultPaths:
    """Object to store the output file layout of a run."""

    def __init__(self, out_dir: str = "results"):
        self.out_dir = out_dir

    def raw(self, fmt: OutputFormat = "csv") -> str:
        """The raw per-trial metrics table."""
        return os.path.join(self.out_dir, f"{PATHS['RAW']}.{fmt}")

    def aggregate(self, fmt: OutputFormat = "csv") -> str:
        """The per (scenario, R, algorithm) aggregate table."""
        return os.path.join(self.out_dir, f"{PATHS['AGGREGATE']}.{fmt}")

    @property
    def metadata(self):
        """Seed, scenarios and assumption labels of the run."""
        return os.path.join(self.out_dir, PATHS["METADATA"])

    @property
    def config(self):
        """The effective configuration, after CLI overrides."""
        return os.path.join(self.out_dir, PATHS["CONFIG"])


class WorkloadBase(ABC):
    """Base interface for file operations of a run."""

    def __init__(self, out_dir: str = "results"):
        self.paths = ResultPaths(out_dir)

    @abstractmethod
    def read(self, path: str) -> list[str]:
        """Reads a file.

        Args:
            path: the full filepath to read from

        Returns:
            List of string lines from the specified path, empty if it does not exist
        """
        ...

    @abstractmethod
    def write(self, content: str, path: str, mode: str = "w") -> None:
        """Writes content to a file.

        Args:
            content: string of content to write
            path: the full filepath to write to
            mode: the write mode. Usually "w" for write, or "a" for append. Default "w"
        """
        ...

    @abstractmethod
    def ensure_dir(self) -> None:
        """Creates the output directory if absent."""
        ...
