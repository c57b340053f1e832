#!/usr/bin/env python3
# Copyright 2024 Canonical Ltd.
# See LICENSE file for licensing details.

"""Request-QS association as a matching game, solved by swap matching (RQSA).

Requests rank QSs by their worst-case (direct swap) fidelity; QSs rank associated
request sets by their optimal P1 utility. RQSA starts from a capacity-aware greedy
association and applies swaps while every participant weakly gains and the summed
QS utility strictly grows, which bounds the number of swaps.
"""

import functools
import logging
import math
from collections.abc import Iterable, Sequence
from typing import NamedTuple

import numpy as np

from core.fidelity import Action, swap_fidelity
from core.models import ActionPlan, Matching, Request, SlotState, SwapRecord
from core.structured_config import MatchConfig
from literals import UTILITY_EPS
from managers.scheduler import ActionScheduler

logger = logging.getLogger(__name__)


class RqsaResult(NamedTuple):
    """Final matching, per-QS action plans and the swap log of one RQSA run."""

    matching: Matching
    plans: dict[int, ActionPlan]
    swaps: list[SwapRecord]
    passes: int = 0
    converged: bool = True


class StabilityReport(NamedTuple):
    """Outcome of the swap-stability oracle."""

    stable: bool
    witness: SwapRecord | None = None


def request_utility(request: Request, qs: int, slot: SlotState) -> float:
    """Worst-case utility of a request at a QS: its direct-swap e2e fidelity."""
    return swap_fidelity(float(slot.f_tx[request.tx, qs]), float(slot.f_rx[qs, request.rx]))


def prefers_qs(request: Request, q: int, q_prime: int, slot: SlotState) -> bool:
    """Whether the request ranks `q` strictly above `q_prime`; ties go to the lower index."""
    if q == q_prime:
        return False
    u, u_prime = request_utility(request, q, slot), request_utility(request, q_prime, slot)
    if u != u_prime:
        return u > u_prime
    return q < q_prime


def qs_ranking(request: Request, slot: SlotState) -> list[int]:
    """All QSs from most to least preferred by the request."""

    def compare(q: int, q_prime: int) -> int:
        return -1 if prefers_qs(request, q, q_prime, slot) else int(q != q_prime)

    return sorted(range(slot.q), key=functools.cmp_to_key(compare))


def init_greedy(requests: Iterable[Request], slot: SlotState) -> Matching:
    """Associates each request, in ascending id, to its best QS with direct-swap capacity left.

    The running tally reserves one pair on each side per associated request; requests that
    fit nowhere stay unassigned.
    """
    requests = sorted(requests, key=lambda r: r.id)
    used_tx = np.zeros_like(slot.n_tx)
    used_rx = np.zeros_like(slot.n_rx)
    matching = Matching.empty(r.id for r in requests)

    for request in requests:
        for qs in qs_ranking(request, slot):
            if (
                used_tx[request.tx, qs] + Action.DIRECT_SWAP.alpha_tx <= slot.n_tx[request.tx, qs]
                and used_rx[qs, request.rx] + Action.DIRECT_SWAP.alpha_rx
                <= slot.n_rx[qs, request.rx]
            ):
                used_tx[request.tx, qs] += Action.DIRECT_SWAP.alpha_tx
                used_rx[qs, request.rx] += Action.DIRECT_SWAP.alpha_rx
                matching.assignment[request.id] = qs
                break
        else:
            logger.debug(f"Request {request.id} left unassigned by greedy initialization")

    return matching


def potential(matching: Matching, scheduler: ActionScheduler, n_qs: int) -> float:
    """Phi: the summed utility of all QSs under a matching."""
    associations = matching.associations(n_qs)
    return math.fsum(scheduler.utility(qs, associations[qs]) for qs in range(n_qs))


class _SwapGame:
    """Evaluation of candidate swaps shared by the swap phase and the stability oracle."""

    def __init__(
        self,
        requests: Sequence[Request],
        slot: SlotState,
        config: MatchConfig,
        scheduler: ActionScheduler,
    ):
        self.requests = {r.id: r for r in requests}
        self.slot = slot
        self.config = config
        self.scheduler = scheduler

    def _utility(self, request: Request, qs: int | None) -> float:
        # being discarded is worth nothing to a request
        return 0.0 if qs is None else request_utility(request, qs, self.slot)

    def _dropped(self, rid: int, matching: Matching) -> bool:
        """Whether the request is unassigned or left unserved by its QS plan."""
        qs = matching.qs_of(rid)
        if qs is None:
            return True
        return self.scheduler.plan(qs, matching.members(qs)).choices[rid] is None

    def _worth(self, rid: int, matching: Matching) -> float:
        if self._dropped(rid, matching):
            return 0.0
        return self._utility(self.requests[rid], matching.qs_of(rid))

    def _accepts(self, gain: float) -> bool:
        if self.config.strict_all:
            return gain > UTILITY_EPS
        return gain >= -UTILITY_EPS

    def candidate_qss(self, rid: int, matching: Matching) -> list[int]:
        """QSs the request strictly prefers over its current one, best first.

        A request its QS drops is worth nothing where it is, so every other QS qualifies.
        """
        request = self.requests[rid]
        current = matching.qs_of(rid)
        ranking = [qs for qs in qs_ranking(request, self.slot) if qs != current]
        if self._dropped(rid, matching):
            return ranking
        return [qs for qs in ranking if prefers_qs(request, qs, current, self.slot)]

    def candidate_partners(self, rid: int, q_prime: int, matching: Matching) -> list[int | None]:
        """Requests of `q_prime` sharing an endpoint with `rid`, then the vacancy if enabled."""
        request = self.requests[rid]
        partners: list[int | None] = []
        if matching.qs_of(rid) is not None:
            partners.extend(
                other
                for other in sorted(matching.members(q_prime))
                if other != rid and request.shares_endpoint(self.requests[other])
            )
        if self.config.allow_relocation:
            partners.append(None)
        return partners

    def evaluate(
        self, rid: int, partner: int | None, q_prime: int, matching: Matching
    ) -> tuple[SwapRecord | None, Matching]:
        """Checks one candidate move of `rid` to `q_prime`, exchanging with `partner`.

        Returns:
            The approved SwapRecord (None if denied) and the post-move matching
        """
        q = matching.qs_of(rid)
        if partner is None:
            moved = matching.moved(rid, q_prime)
        else:
            moved = matching.swapped(rid, partner)
            # the partner must weakly (or, in strict mode, strictly) prefer q over q'
            partner_request = self.requests[partner]
            partner_gain = self._utility(partner_request, q) - self._worth(partner, matching)
            if not self._accepts(partner_gain):
                return None, moved

        # r gains by construction of the candidate QSs
        delta = 0.0
        participants = [q_prime] if q is None else [q, q_prime]
        for qs in participants:
            before = self.scheduler.utility(qs, matching.members(qs))
            after = self.scheduler.utility(qs, moved.members(qs))
            gain = after - before
            # a QS only losing a request to a vacancy cannot gain strictly
            exempt = self.config.strict_all and partner is None and qs == q
            if not exempt and not self._accepts(gain):
                return None, moved
            if exempt and gain < -UTILITY_EPS:
                return None, moved
            delta += gain

        if delta <= UTILITY_EPS:
            return None, moved

        return SwapRecord(r=rid, r_prime=partner, q=q, q_prime=q_prime, delta=delta), moved

    def find_move(self, rid: int, matching: Matching) -> tuple[SwapRecord | None, Matching]:
        """First approved move of `rid` in scan order, if any."""
        for q_prime in self.candidate_qss(rid, matching):
            for partner in self.candidate_partners(rid, q_prime, matching):
                record, moved = self.evaluate(rid, partner, q_prime, matching)
                if record is not None:
                    return record, moved
        return None, matching


def find_and_apply_swaps(
    matching: Matching,
    requests: Sequence[Request],
    slot: SlotState,
    config: MatchConfig | None = None,
    scheduler: ActionScheduler | None = None,
) -> tuple[Matching, list[SwapRecord]]:
    """Swap matching phase: applies approved swaps until a full pass finds none."""
    matching, swaps, _, _ = _swap_phase(matching, requests, slot, config, scheduler)
    return matching, swaps


def _swap_phase(
    matching: Matching,
    requests: Sequence[Request],
    slot: SlotState,
    config: MatchConfig | None,
    scheduler: ActionScheduler | None,
) -> tuple[Matching, list[SwapRecord], int, bool]:
    config = config or MatchConfig()
    scheduler = scheduler or ActionScheduler(slot, requests)
    game = _SwapGame(requests, slot, config, scheduler)
    swaps: list[SwapRecord] = []

    passes = 0
    while passes < config.pass_limit:
        passes += 1
        changed = False
        for rid in sorted(game.requests):
            record, moved = game.find_move(rid, matching)
            if record is None:
                continue
            matching = moved
            swaps.append(record)
            changed = True
            logger.debug(
                f"Approved {'relocation' if record.is_relocation else 'swap'} "
                f"r={record.r} r'={record.r_prime} q={record.q} q'={record.q_prime} "
                f"delta={record.delta:.6f}"
            )
        if not changed:
            return matching, swaps, passes, True

    logger.warning(f"Swap phase stopped at the pass limit {config.pass_limit} before converging")
    return matching, swaps, passes, False


def rqsa(
    requests: Sequence[Request],
    slot: SlotState,
    config: MatchConfig | None = None,
    scheduler: ActionScheduler | None = None,
) -> RqsaResult:
    """Runs greedy initialization, the swap phase, then P1 at every QS."""
    requests = list(requests)
    scheduler = scheduler or ActionScheduler(slot, requests)

    matching = init_greedy(requests, slot)
    matching, swaps, passes, converged = _swap_phase(
        matching, requests, slot, config, scheduler
    )

    associations = matching.associations(slot.q)
    plans = {qs: scheduler.plan(qs, associations[qs]) for qs in range(slot.q)}

    logger.debug(
        f"RQSA: {len(swaps)} swaps in {passes} passes, {scheduler.solves} P1 solves, "
        f"utility {math.fsum(plans[qs].utility for qs in sorted(plans)):.6f}"
    )
    return RqsaResult(matching, plans, swaps, passes, converged)


def is_swap_stable(
    matching: Matching,
    requests: Sequence[Request],
    slot: SlotState,
    config: MatchConfig | None = None,
    scheduler: ActionScheduler | None = None,
) -> StabilityReport:
    """Exhaustively looks for a beneficial swap or relocation under the RQSA move rules."""
    requests = list(requests)
    game = _SwapGame(
        requests, slot, config or MatchConfig(), scheduler or ActionScheduler(slot, requests)
    )
    for rid in sorted(game.requests):
        record, _ = game.find_move(rid, matching)
        if record is not None:
            return StabilityReport(False, record)

    return StabilityReport(True)
