#!/usr/bin/env python3
# Copyright 2024 Canonical Ltd.
# See LICENSE file for licensing details.

"""Fidelity calculus for Werner-state EPR pairs under swapping and distillation.

All quantities are scalar fidelities F in [1/4, 1], with F = (3W + 1) / 4 for the
Werner parameter W. Gate noise and measurement errors are not modelled.
"""

import logging
from dataclasses import dataclass
from enum import Enum

from literals import ALPHA_RX, ALPHA_TX, FIDELITY_MAX, FIDELITY_MIN, FIDELITY_TOL

logger = logging.getLogger(__name__)


class FidelityDomainError(ValueError):
    """Raised when a fidelity or Werner parameter lies outside its physical range."""


@dataclass(frozen=True)
class ActionCost:
    """Action number and link-level EPR pairs it consumes on each side."""

    index: int
    alpha_tx: int
    alpha_rx: int


class Action(Enum):
    """The four QS actions; distillation, if any, always precedes the swap."""

    DIRECT_SWAP = ActionCost(1, ALPHA_TX[0], ALPHA_RX[0])
    TX_DISTILL_SWAP = ActionCost(2, ALPHA_TX[1], ALPHA_RX[1])
    RX_DISTILL_SWAP = ActionCost(3, ALPHA_TX[2], ALPHA_RX[2])
    BOTH_DISTILL_SWAP = ActionCost(4, ALPHA_TX[3], ALPHA_RX[3])

    @property
    def index(self) -> int:
        """1-based action number j."""
        return self.value.index

    @property
    def alpha_tx(self) -> int:
        """Pairs consumed on the Tx side."""
        return self.value.alpha_tx

    @property
    def alpha_rx(self) -> int:
        """Pairs consumed on the Rx side."""
        return self.value.alpha_rx

    @property
    def distills_tx(self) -> bool:
        """Whether the Tx-side pairs are distilled before swapping."""
        return self.alpha_tx == 2

    @property
    def distills_rx(self) -> bool:
        """Whether the Rx-side pairs are distilled before swapping."""
        return self.alpha_rx == 2

    @classmethod
    def from_index(cls, index: int) -> "Action":
        """Returns the action with 1-based number `index`."""
        for action in cls:
            if action.index == index:
                return action

        raise ValueError(f"no action with index {index}")


ACTIONS: tuple[Action, ...] = tuple(Action)


def _check_fidelity(f: float, name: str = "fidelity") -> float:
    if not FIDELITY_MIN - FIDELITY_TOL <= f <= FIDELITY_MAX + FIDELITY_TOL:
        raise FidelityDomainError(f"{name}={f} outside [{FIDELITY_MIN}, {FIDELITY_MAX}]")
    return f


def werner_to_fidelity(w: float) -> float:
    """Converts a Werner parameter W in [0, 1] into a fidelity (3W + 1) / 4."""
    if not 0.0 - FIDELITY_TOL <= w <= 1.0 + FIDELITY_TOL:
        raise FidelityDomainError(f"werner parameter {w} outside [0, 1]")
    return (3 * w + 1) / 4


def fidelity_to_werner(f: float) -> float:
    """Converts a fidelity in [1/4, 1] into its Werner parameter (4F - 1) / 3."""
    _check_fidelity(f)
    return (4 * f - 1) / 3


def swap_fidelity(f_tx: float, f_rx: float) -> float:
    """Fidelity of the e2e pair obtained by swapping a Tx-side and an Rx-side pair.

    Args:
        f_tx: fidelity of the pair shared with the Tx node
        f_rx: fidelity of the pair shared with the Rx node

    Returns:
        1/4 + 3/4 * W_tx * W_rx
    """
    _check_fidelity(f_tx, "f_tx")
    _check_fidelity(f_rx, "f_rx")
    w_tx = (4 * f_tx - 1) / 3
    w_rx = (4 * f_rx - 1) / 3
    return 0.25 + 0.75 * w_tx * w_rx


def distill_fidelity(f: float) -> float:
    """Output fidelity of one Oxford-protocol round on two identical Werner pairs."""
    _check_fidelity(f)
    e = (1 - f) / 3
    numerator = f**2 + e**2
    denominator = f**2 + 2 * f * e + 5 * e**2
    return numerator / denominator


def e2e_fidelity(f_tx: float, f_rx: float, action: Action) -> float:
    """Fidelity of the e2e pair a QS produces for one request with the given action."""
    if action.distills_tx:
        f_tx = distill_fidelity(f_tx)
    if action.distills_rx:
        f_rx = distill_fidelity(f_rx)

    return swap_fidelity(f_tx, f_rx)
