#!/usr/bin/env python3
# Copyright 2024 Canonical Ltd.
# See LICENSE file for licensing details.

"""Collection of state objects for networks, slots, requests and assignments."""

import logging
import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field

import numpy as np

from core.fidelity import Action
from literals import FIDELITY_MAX, FIDELITY_MIN, FIDELITY_TOL, OptimalMarker

logger = logging.getLogger(__name__)


def _as_matrix(value, shape: tuple[int, int], dtype, name: str) -> np.ndarray:
    matrix = np.array(value, dtype=dtype)
    if matrix.shape != shape:
        raise ValueError(f"{name} has shape {matrix.shape}, expected {shape}")
    matrix.setflags(write=False)
    return matrix


@dataclass(frozen=True, eq=False)
class Topology:
    """Static network geometry: link lengths between QSs and end nodes."""

    d_tx: np.ndarray
    d_rx: np.ndarray
    n: int
    l0_km: float

    def __post_init__(self):
        d_tx = np.array(self.d_tx, dtype=float)
        d_rx = np.array(self.d_rx, dtype=float)
        if d_tx.ndim != 2 or d_rx.ndim != 2 or d_tx.shape[1] != d_rx.shape[0]:
            raise ValueError(f"incompatible link matrices {d_tx.shape} and {d_rx.shape}")
        if min(d_tx.shape + d_rx.shape) < 1:
            raise ValueError("topology needs at least one Tx node, Rx node and QS")
        if (d_tx <= 0).any() or (d_rx <= 0).any():
            raise ValueError("all link distances must be positive")
        if self.n < 1 or self.l0_km <= 0:
            raise ValueError(f"invalid n={self.n} or L0={self.l0_km}")

        object.__setattr__(self, "d_tx", _as_matrix(d_tx, d_tx.shape, float, "d_tx"))
        object.__setattr__(self, "d_rx", _as_matrix(d_rx, d_rx.shape, float, "d_rx"))

    @property
    def k(self) -> int:
        """Number of Tx nodes."""
        return self.d_tx.shape[0]

    @property
    def q(self) -> int:
        """Number of QSs."""
        return self.d_tx.shape[1]

    @property
    def m(self) -> int:
        """Number of Rx nodes."""
        return self.d_rx.shape[1]


@dataclass(frozen=True, eq=False)
class SlotState:
    """Realized link-level EPR pair counts and fidelities for one time slot.

    Indexing follows the links: `n_tx[k, q]`, `f_tx[k, q]`, `n_rx[q, m]`, `f_rx[q, m]`.
    """

    n_tx: np.ndarray
    f_tx: np.ndarray
    n_rx: np.ndarray
    f_rx: np.ndarray

    def __post_init__(self):
        n_tx = np.array(self.n_tx, dtype=int)
        n_rx = np.array(self.n_rx, dtype=int)
        if n_tx.ndim != 2 or n_rx.ndim != 2 or n_tx.shape[1] != n_rx.shape[0]:
            raise ValueError(f"incompatible count matrices {n_tx.shape} and {n_rx.shape}")

        object.__setattr__(self, "n_tx", _as_matrix(n_tx, n_tx.shape, int, "n_tx"))
        object.__setattr__(self, "n_rx", _as_matrix(n_rx, n_rx.shape, int, "n_rx"))
        object.__setattr__(self, "f_tx", _as_matrix(self.f_tx, n_tx.shape, float, "f_tx"))
        object.__setattr__(self, "f_rx", _as_matrix(self.f_rx, n_rx.shape, float, "f_rx"))

        if (self.n_tx < 0).any() or (self.n_rx < 0).any():
            raise ValueError("EPR pair counts cannot be negative")
        for name, matrix in [("f_tx", self.f_tx), ("f_rx", self.f_rx)]:
            if (matrix < FIDELITY_MIN - FIDELITY_TOL).any() or (
                matrix > FIDELITY_MAX + FIDELITY_TOL
            ).any():
                raise ValueError(f"{name} has entries outside [{FIDELITY_MIN}, {FIDELITY_MAX}]")

    @property
    def k(self) -> int:
        """Number of Tx nodes."""
        return self.n_tx.shape[0]

    @property
    def q(self) -> int:
        """Number of QSs."""
        return self.n_tx.shape[1]

    @property
    def m(self) -> int:
        """Number of Rx nodes."""
        return self.n_rx.shape[1]


@dataclass(frozen=True)
class Request:
    """A demand for one e2e pair from Tx node `tx` to Rx node `rx`."""

    id: int
    tx: int
    rx: int
    f_min: float

    def shares_endpoint(self, other: "Request") -> bool:
        """Whether both requests use the same Tx node or the same Rx node."""
        return self.tx == other.tx or self.rx == other.rx


@dataclass
class ActionPlan:
    """Per-request action choices of one QS; `None` means the request is dropped."""

    qs: int
    choices: dict[int, Action | None] = field(default_factory=dict)
    fidelities: dict[int, float] = field(default_factory=dict)

    @property
    def served(self) -> list[int]:
        """Ids of the requests served by this QS, ascending."""
        return sorted(rid for rid, action in self.choices.items() if action is not None)

    @property
    def utility(self) -> float:
        """Sum of achieved e2e fidelities, accumulated in ascending request id."""
        return math.fsum(self.fidelities[rid] for rid in self.served)


@dataclass
class Matching:
    """Association of requests to QSs; `None` means the request is discarded."""

    assignment: dict[int, int | None] = field(default_factory=dict)

    @classmethod
    def empty(cls, request_ids: Iterable[int]) -> "Matching":
        """All requests unassigned."""
        return cls({rid: None for rid in request_ids})

    def qs_of(self, rid: int) -> int | None:
        """QS the request is associated with."""
        return self.assignment.get(rid)

    def members(self, qs: int) -> frozenset[int]:
        """The associated request set R_q of a QS."""
        return frozenset(rid for rid, q in self.assignment.items() if q == qs)

    def associations(self, n_qs: int) -> dict[int, frozenset[int]]:
        """R_q for every QS index below `n_qs`."""
        sets: dict[int, set[int]] = {qs: set() for qs in range(n_qs)}
        for rid, qs in self.assignment.items():
            if qs is not None:
                sets[qs].add(rid)
        return {qs: frozenset(rids) for qs, rids in sets.items()}

    def moved(self, rid: int, qs: int | None) -> "Matching":
        """A copy with `rid` associated to `qs`."""
        return Matching(self.assignment | {rid: qs})

    def swapped(self, rid: int, other: int) -> "Matching":
        """A copy where `rid` and `other` exchange their QSs."""
        return Matching(
            self.assignment | {rid: self.assignment[other], other: self.assignment[rid]}
        )


@dataclass(frozen=True)
class SwapRecord:
    """An approved move of the swap phase; `r_prime=None` is a relocation to a vacancy."""

    r: int
    r_prime: int | None
    q: int | None
    q_prime: int
    delta: float

    @property
    def is_relocation(self) -> bool:
        """Whether the move paired `r` with a vacancy instead of another request."""
        return self.r_prime is None


@dataclass
class Solution:
    """Outcome of one association algorithm on one slot."""

    matching: Matching
    plans: dict[int, ActionPlan]
    optimal_flag: bool = False
    bound_gap: float = 0.0

    @property
    def total_utility(self) -> float:
        """Sum of all QS utilities."""
        return math.fsum(self.plans[qs].utility for qs in sorted(self.plans))

    @property
    def served_count(self) -> int:
        """Number of requests with a chosen action."""
        return sum(len(plan.served) for plan in self.plans.values())

    @property
    def served_ids(self) -> list[int]:
        """Ids of all served requests, ascending."""
        return sorted(rid for plan in self.plans.values() for rid in plan.served)


@dataclass
class TrialMetrics:
    """One raw result row: one algorithm on one sampled instance."""

    seed: int
    scenario: str
    K: int  # noqa: N815
    M: int  # noqa: N815
    Q: int  # noqa: N815
    R: int  # noqa: N815
    algorithm: str
    served_fraction: float
    total_fidelity: float
    swap_count: int = 0
    runtime_ms: float = 0.0
    optimal_proven: OptimalMarker = ""
    instance_fingerprint: str = ""

    def as_row(self) -> Mapping[str, object]:
        """The row in raw-table column order."""
        return dict(self.__dict__)
