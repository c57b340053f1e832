#!/usr/bin/env python3
# Copyright 2024 Canonical Ltd.
# See LICENSE file for licensing details.

"""Benchmark association algorithms: exact optimum, greedy and random."""

import itertools
import logging
import math
import time
from collections.abc import Sequence

import numpy as np

from core.fidelity import Action
from core.models import ActionPlan, Matching, Request, SlotState, Solution
from literals import DEADLINE_CHECK_EVERY, DEFAULT_OPTIMAL_BUDGET_SECS, SEARCH_EPS, Objective
from managers.matching import init_greedy
from managers.scheduler import ActionScheduler, exhaustive_p1, feasible_actions, grouped_bound

logger = logging.getLogger(__name__)

JointOption = tuple[int, Action, float, float]  # (qs, action, fidelity, objective value)


def solution_from_matching(
    matching: Matching, slot: SlotState, scheduler: ActionScheduler
) -> Solution:
    """Lets every QS solve P1 for its associated requests under `matching`."""
    associations = matching.associations(slot.q)
    plans = {qs: scheduler.plan(qs, associations[qs]) for qs in range(slot.q)}
    return Solution(matching=matching, plans=plans)


def solve_greedy(
    requests: Sequence[Request], slot: SlotState, scheduler: ActionScheduler | None = None
) -> Solution:
    """Greedy worst-case-fidelity association with next-best spillover, then P1 per QS."""
    scheduler = scheduler or ActionScheduler(slot, requests)
    return solution_from_matching(init_greedy(requests, slot), slot, scheduler)


def solve_random(
    requests: Sequence[Request],
    slot: SlotState,
    rng: np.random.Generator,
    scheduler: ActionScheduler | None = None,
) -> Solution:
    """Uniformly random QS per request, without capacity checks or re-draws, then P1 per QS."""
    scheduler = scheduler or ActionScheduler(slot, requests)
    ordered = sorted(requests, key=lambda r: r.id)
    draws = rng.integers(0, slot.q, size=len(ordered))
    matching = Matching({r.id: int(qs) for r, qs in zip(ordered, draws)})
    return solution_from_matching(matching, slot, scheduler)


def _signature(item: tuple[Request, list[JointOption]]) -> tuple:
    request, options = item
    return (request.tx, request.rx, tuple((qs, action.index) for qs, action, _, _ in options))


class _OptimalSearch:
    """Depth-first branch-and-bound over joint (QS, action)-or-drop choices per request."""

    def __init__(
        self,
        requests: Sequence[Request],
        slot: SlotState,
        budget_secs: float,
        objective: Objective,
    ):
        self.slot = slot
        self.deadline = time.monotonic() + budget_secs
        # lexicographic count-then-fidelity: one more served request outweighs any fidelity sum
        weight = float(len(requests) + 1) if objective == "count" else 0.0

        items: list[tuple[Request, list[JointOption]]] = []
        for request in sorted(requests, key=lambda r: r.id):
            options = [
                (qs, action, fidelity, weight + fidelity)
                for qs in range(slot.q)
                for action, fidelity in feasible_actions(qs, request, slot)
            ]
            if options:
                options.sort(key=lambda o: (-o[3], o[0], o[1].index))
                items.append((request, options))
        self.items = sorted(
            items, key=lambda item: (-item[1][0][3], _signature(item), item[0].id)
        )
        # twins take option positions no earlier than their predecessor, dropping last
        self.twin = [
            depth > 0 and _signature(self.items[depth - 1]) == _signature(item)
            for depth, item in enumerate(self.items)
        ]
        self.position = [0] * len(self.items)
        self.request_ids = [r.id for r in sorted(requests, key=lambda r: r.id)]

        self.cap_tx = {
            (k, qs): int(slot.n_tx[k, qs]) for k in range(slot.k) for qs in range(slot.q)
        }
        self.cap_rx = {
            (qs, m): int(slot.n_rx[qs, m]) for qs in range(slot.q) for m in range(slot.m)
        }
        self.node_tx = {k: int(slot.n_tx[k].sum()) for k in range(slot.k)}
        self.node_rx = {m: int(slot.n_rx[:, m].sum()) for m in range(slot.m)}

        self.current: list[JointOption | None] = [None] * len(self.items)
        self.best: list[JointOption | None] = [None] * len(self.items)
        self.best_value = 0.0
        self.open_bound = 0.0
        self.aborted = False
        self.nodes = 0
        self.checks = 0

    def _fits(self, request: Request, qs: int, action: Action) -> bool:
        return (
            action.alpha_tx <= self.cap_tx[request.tx, qs]
            and action.alpha_rx <= self.cap_rx[qs, request.rx]
        )

    def _consume(self, request: Request, qs: int, action: Action, sign: int) -> None:
        self.cap_tx[request.tx, qs] -= sign * action.alpha_tx
        self.cap_rx[qs, request.rx] -= sign * action.alpha_rx
        self.node_tx[request.tx] -= sign * action.alpha_tx
        self.node_rx[request.rx] -= sign * action.alpha_rx

    def _bound(self, depth: int) -> float:
        values, tx_groups, rx_groups = [], [], []
        for request, options in self.items[depth:]:
            values.append(
                next(
                    (value for qs, action, _, value in options if self._fits(request, qs, action)),
                    0.0,
                )
            )
            tx_groups.append(request.tx)
            rx_groups.append(request.rx)

        return min(
            grouped_bound(values, tx_groups, self.node_tx),
            grouped_bound(values, rx_groups, self.node_rx),
        )

    def _expired(self) -> bool:
        self.checks += 1
        if not self.aborted and self.checks % DEADLINE_CHECK_EVERY == 0:
            self.aborted = time.monotonic() > self.deadline
        return self.aborted

    def _search(self, depth: int, partial: float) -> None:
        self.nodes += 1
        if depth == len(self.items):
            if partial > self.best_value + SEARCH_EPS:
                self.best_value = partial
                self.best = list(self.current)
            return

        if self._expired():
            self.open_bound = max(self.open_bound, partial + self._bound(depth))
            return

        if partial + self._bound(depth) <= self.best_value + SEARCH_EPS:
            return

        request, options = self.items[depth]
        start = self.position[depth - 1] if self.twin[depth] else 0
        for position, option in enumerate(options):
            qs, action, _, value = option
            if position < start or not self._fits(request, qs, action):
                continue
            self.position[depth] = position
            self._consume(request, qs, action, +1)
            self.current[depth] = option
            self._search(depth + 1, partial + value)
            self._consume(request, qs, action, -1)
            if self.aborted:
                self.current[depth] = None
                self.open_bound = max(self.open_bound, partial + self._bound(depth))
                return

        self.current[depth] = None
        self.position[depth] = len(options)
        self._search(depth + 1, partial)

    def run(self) -> Solution:
        self._search(0, 0.0)

        matching = Matching.empty(self.request_ids)
        plans = {qs: ActionPlan(qs=qs) for qs in range(self.slot.q)}
        for (request, _), choice in zip(self.items, self.best):
            if choice is None:
                continue
            qs, action, fidelity, _ = choice
            matching.assignment[request.id] = qs
            plans[qs].choices[request.id] = action
            plans[qs].fidelities[request.id] = fidelity

        gap = max(0.0, self.open_bound - self.best_value) if self.aborted else 0.0
        if self.aborted:
            logger.warning(
                f"Optimal search hit its budget after {self.nodes} nodes, "
                f"incumbent {self.best_value:.6f}, residual gap {gap:.6f}"
            )
        else:
            logger.debug(f"Optimal search proved optimality in {self.nodes} nodes")

        return Solution(
            matching=matching, plans=plans, optimal_flag=not self.aborted, bound_gap=gap
        )


def solve_optimal(
    requests: Sequence[Request],
    slot: SlotState,
    budget: float = DEFAULT_OPTIMAL_BUDGET_SECS,
    objective: Objective = "fidelity",
) -> Solution:
    """Exact joint association and action selection, within a wall-clock budget in seconds.

    Returns:
        The proven optimum with `optimal_flag=True`, or the best incumbent with
        `optimal_flag=False` and the residual gap to the best open bound
    """
    return _OptimalSearch(list(requests), slot, budget, objective).run()


def exhaustive_optimum(requests: Sequence[Request], slot: SlotState) -> Solution:
    """Brute force over all (Q+1)^R assignments with exhaustive P1 at every QS."""
    ordered = sorted(requests, key=lambda r: r.id)
    best_value, best_plans = 0.0, {qs: ActionPlan(qs=qs) for qs in range(slot.q)}
    best_matching = Matching.empty(r.id for r in ordered)
    plan_cache: dict[tuple[int, tuple[int, ...]], ActionPlan] = {}

    for assignment in itertools.product([*range(slot.q), None], repeat=len(ordered)):
        plans = {}
        for qs in range(slot.q):
            members = tuple(r.id for r, a in zip(ordered, assignment) if a == qs)
            if (qs, members) not in plan_cache:
                plan_cache[qs, members] = exhaustive_p1(
                    qs, [r for r in ordered if r.id in members], slot
                )
            plans[qs] = plan_cache[qs, members]

        value = math.fsum(plans[qs].utility for qs in range(slot.q))
        if value > best_value + SEARCH_EPS:
            best_value, best_plans = value, plans
            best_matching = Matching({r.id: a for r, a in zip(ordered, assignment)})

    return Solution(matching=best_matching, plans=best_plans, optimal_flag=True)
