#!/usr/bin/env python3
# Copyright 2024 Canonical Ltd.
# See LICENSE file for licensing details.

import numpy as np
import pytest

from core.models import Request, SlotState
from core.structured_config import ScenarioParams


@pytest.fixture
def uniform_slot():
    def _make(k: int, q: int, m: int, budget: int = 2, fid: float = 0.9) -> SlotState:
        return SlotState(
            n_tx=np.full((k, q), budget),
            f_tx=np.full((k, q), fid),
            n_rx=np.full((q, m), budget),
            f_rx=np.full((q, m), fid),
        )

    return _make


@pytest.fixture
def make_slot():
    def _make(n_tx, f_tx, n_rx, f_rx) -> SlotState:
        return SlotState(
            n_tx=np.array(n_tx), f_tx=np.array(f_tx), n_rx=np.array(n_rx), f_rx=np.array(f_rx)
        )

    return _make


@pytest.fixture
def default_scenario() -> ScenarioParams:
    return ScenarioParams()


@pytest.fixture
def crossed_instance(make_slot):
    """Two requests on one Tx node, each associated to the QS the other prefers."""
    slot = make_slot(
        n_tx=[[1, 1]],
        f_tx=[[0.9, 0.9]],
        n_rx=[[1, 1], [1, 1]],
        f_rx=[[0.95, 0.85], [0.85, 0.95]],
    )
    requests = [Request(0, tx=0, rx=0, f_min=0.5), Request(1, tx=0, rx=1, f_min=0.5)]
    return slot, requests


@pytest.fixture
def distill_conflict_instance(make_slot):
    """Both requests rank QS 0 first but it can only afford distillation for one of them."""
    slot = make_slot(
        n_tx=[[2, 2]],
        f_tx=[[0.9, 0.88]],
        n_rx=[[2, 2], [2, 2]],
        f_rx=[[0.95, 0.95], [0.95, 0.95]],
    )
    requests = [Request(0, tx=0, rx=0, f_min=0.87), Request(1, tx=0, rx=1, f_min=0.87)]
    return slot, requests
