#!/usr/bin/env python3
# Copyright 2024 Canonical Ltd.
# See LICENSE file for licensing details.

"""Filesystem workload class and methods."""

import logging
import os

from typing_extensions import override

from core.workload import WorkloadBase

logger = logging.getLogger(__name__)


class FilesystemWorkload(WorkloadBase):
    """Wrapper for reading and writing run files on the local filesystem."""

    @override
    def read(self, path: str) -> list[str]:
        if not os.path.exists(path):
            return []
        else:
            with open(path) as f:
                content = f.read().split("\n")

        return content

    @override
    def write(self, content: str, path: str, mode: str = "w") -> None:
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        with open(path, mode, newline="") as f:
            f.write(content)

        logger.debug(f"Wrote {len(content)} characters to {path}")

    @override
    def ensure_dir(self) -> None:
        os.makedirs(self.paths.out_dir, exist_ok=True)
