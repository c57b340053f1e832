#!/usr/bin/env python3
# Copyright 2024 Canonical Ltd.
# See LICENSE file for licensing details.

"""Exact per-QS action selection under link-level EPR budgets.

A QS with an associated request set picks, for every request, one of the four
actions or drops it, maximising the summed e2e fidelity of the served requests
while the pairs consumed per Tx node and per Rx node stay within the slot's
budgets. Unservable requests are dropped and contribute 0.
"""

import itertools
import logging
import math
from collections import defaultdict
from collections.abc import Hashable, Iterable, Sequence
from typing import NamedTuple

from core.fidelity import ACTIONS, Action, e2e_fidelity
from core.models import ActionPlan, Request, SlotState
from literals import EXHAUSTIVE_P1_BELOW, SEARCH_EPS

logger = logging.getLogger(__name__)

Option = tuple[Action, float]


class PlanInvariantError(ValueError):
    """Raised when an ActionPlan violates a fidelity or capacity constraint."""


def feasible_actions(qs: int, request: Request, slot: SlotState) -> list[Option]:
    """Actions meeting `f_min` whose consumption alone fits the link budgets.

    Returns:
        (action, e2e fidelity) pairs sorted by fidelity descending, then action number
    """
    budget_tx = int(slot.n_tx[request.tx, qs])
    budget_rx = int(slot.n_rx[qs, request.rx])
    f_tx = float(slot.f_tx[request.tx, qs])
    f_rx = float(slot.f_rx[qs, request.rx])

    options = []
    for action in ACTIONS:
        if action.alpha_tx > budget_tx or action.alpha_rx > budget_rx:
            continue
        fidelity = e2e_fidelity(f_tx, f_rx, action)
        if fidelity >= request.f_min:
            options.append((action, fidelity))

    return sorted(options, key=lambda option: (-option[1], option[0].index))


def grouped_bound(
    values: Sequence[float], groups: Sequence[Hashable], caps: dict[Hashable, int]
) -> float:
    """Upper bound when each group can serve at most `caps[group]` of its members.

    Every served request consumes at least one pair of its group's budget, so only the
    `caps[group]` largest values of a group can count.
    """
    members: dict[Hashable, list[float]] = defaultdict(list)
    for value, group in zip(values, groups):
        if value > 0:
            members[group].append(value)

    total = 0.0
    for group, group_values in members.items():
        cap = caps.get(group, 0)
        if cap <= 0:
            continue
        group_values.sort(reverse=True)
        total += sum(group_values[:cap])
    return total


class _RequestClass(NamedTuple):
    """Interchangeable requests: same endpoints and the same feasible actions."""

    tx: int
    rx: int
    ids: tuple[int, ...]
    options: tuple[Option, ...]


# (pairs used per node, value, per-class or per-action counts)
_Entry = tuple[tuple[int, ...], float, tuple]


def _pareto(entries: Iterable[_Entry]) -> list[_Entry]:
    """Drops entries using no fewer pairs than a kept entry of at least the same value."""
    kept: list[_Entry] = []
    for entry in sorted(entries, key=lambda e: (-e[1], sum(e[0]), e[0])):
        used = entry[0]
        if not any(all(a <= b for a, b in zip(other[0], used)) for other in kept):
            kept.append(entry)
    return kept


def _offer(table: dict, key: Hashable, value: float, payload) -> None:
    """Keeps the first value seen for `key` unless a later one is strictly larger."""
    if key not in table or value > table[key][0] + SEARCH_EPS:
        table[key] = (value, payload)


class _P1Search:
    """Exact dynamic program over classes of interchangeable requests.

    Each class decides how many of its copies take each action. Classes are folded
    into one menu per Tx node keyed by the pairs drawn at each Rx node, then the Tx
    node menus are combined under the Rx budgets. An Rx node leaves the state once
    the last Tx node touching it is folded in.
    """

    def __init__(self, qs: int, requests: Sequence[Request], slot: SlotState):
        self.qs = qs
        self.dropped: list[int] = []
        grouped: dict[tuple, list[int]] = defaultdict(list)
        options_of: dict[tuple, tuple[Option, ...]] = {}
        for request in sorted(requests, key=lambda r: r.id):
            options = feasible_actions(qs, request, slot)
            if not options:
                self.dropped.append(request.id)
                continue
            options = tuple(sorted(options, key=lambda option: option[0].index))
            key = (request.tx, request.rx, tuple(action.index for action, _ in options))
            grouped[key].append(request.id)
            options_of[key] = options

        self.classes = [
            _RequestClass(key[0], key[1], tuple(ids), options_of[key])
            for key, ids in sorted(grouped.items(), key=lambda item: (item[0], item[1][0]))
        ]
        self.cap_tx = {c.tx: int(slot.n_tx[c.tx, qs]) for c in self.classes}
        self.cap_rx = {c.rx: int(slot.n_rx[qs, c.rx]) for c in self.classes}
        self.states = 0

    def _class_menu(self, request_class: _RequestClass) -> list[_Entry]:
        cap_tx = self.cap_tx[request_class.tx]
        cap_rx = self.cap_rx[request_class.rx]
        options = request_class.options
        table: dict[tuple[int, int], tuple[float, tuple[int, ...]]] = {}

        def expand(j: int, left: int, used_tx: int, used_rx: int, value: float, counts):
            if j == len(options):
                _offer(table, (used_tx, used_rx), value, counts)
                return
            action, fidelity = options[j]
            for copies in range(left + 1):
                tx = used_tx + copies * action.alpha_tx
                rx = used_rx + copies * action.alpha_rx
                if tx > cap_tx or rx > cap_rx:
                    break
                expand(j + 1, left - copies, tx, rx, value + copies * fidelity, (*counts, copies))

        expand(0, len(request_class.ids), 0, 0, 0.0, ())
        return _pareto((used, value, counts) for used, (value, counts) in table.items())

    def _node_menu(self, classes: list[_RequestClass], rx_nodes: list[int]) -> list[_Entry]:
        """Best value per Rx draw vector for the classes sharing one Tx node."""
        cap_tx = self.cap_tx[classes[0].tx]
        position = {m: i for i, m in enumerate(rx_nodes)}
        states: dict = {(0, (0,) * len(rx_nodes)): (0.0, ())}
        for request_class in classes:
            i = position[request_class.rx]
            cap_rx = self.cap_rx[request_class.rx]
            class_menu = self._class_menu(request_class)
            folded: dict = {}
            for (used_tx, used_rx), (value, picks) in states.items():
                for (tx, rx), class_value, counts in class_menu:
                    if used_tx + tx > cap_tx or used_rx[i] + rx > cap_rx:
                        continue
                    drawn = (*used_rx[:i], used_rx[i] + rx, *used_rx[i + 1 :])
                    _offer(folded, (used_tx + tx, drawn), value + class_value, (*picks, counts))
            states = folded
            self.states += len(states)

        menu: dict = {}
        for (_, used_rx), (value, picks) in states.items():
            _offer(menu, used_rx, value, picks)
        return _pareto((used, value, picks) for used, (value, picks) in menu.items())

    def _best_picks(self, by_tx: dict[int, list[_RequestClass]]) -> list[tuple]:
        rx_nodes = sorted(self.cap_rx)
        position = {m: i for i, m in enumerate(rx_nodes)}
        tx_nodes = sorted(by_tx)
        last_use = {c.rx: stage for stage, k in enumerate(tx_nodes) for c in by_tx[k]}

        states: dict = {(0,) * len(rx_nodes): (0.0, ())}
        for stage, k in enumerate(tx_nodes):
            node_rx = sorted({c.rx for c in by_tx[k]})
            menu = self._node_menu(by_tx[k], node_rx)
            folded: dict = {}
            for used, (value, picks) in states.items():
                for drawn, node_value, node_picks in menu:
                    after = list(used)
                    for m, pairs in zip(node_rx, drawn):
                        after[position[m]] += pairs
                    if any(after[position[m]] > self.cap_rx[m] for m in node_rx):
                        continue
                    for m in node_rx:
                        if last_use[m] == stage:
                            after[position[m]] = 0
                    _offer(folded, tuple(after), value + node_value, (*picks, node_picks))
            states = folded
            self.states += len(states)

        best_value, best_picks = 0.0, ()
        for value, picks in states.values():
            if value > best_value + SEARCH_EPS or not best_picks:
                best_value, best_picks = value, picks
        return list(best_picks)

    def run(self) -> ActionPlan:
        plan = ActionPlan(qs=self.qs)
        for rid in self.dropped:
            plan.choices[rid] = None

        by_tx: dict[int, list[_RequestClass]] = defaultdict(list)
        for request_class in self.classes:
            by_tx[request_class.tx].append(request_class)

        for k, node_picks in zip(sorted(by_tx), self._best_picks(by_tx)):
            for request_class, counts in zip(by_tx[k], node_picks):
                ids = iter(request_class.ids)
                for (action, fidelity), copies in zip(request_class.options, counts):
                    for rid in itertools.islice(ids, copies):
                        plan.choices[rid], plan.fidelities[rid] = action, fidelity
                for rid in ids:
                    plan.choices[rid] = None

        logger.debug(
            f"QS {self.qs}: P1 over {len(self.classes)} request classes kept "
            f"{self.states} states, utility {plan.utility:.6f}"
        )
        return plan


def solve_p1(qs: int, requests: Iterable[Request], slot: SlotState) -> ActionPlan:
    """Optimal action plan of one QS for its associated requests.

    Requests with the same endpoints and feasible actions are interchangeable; among
    them the lowest ids are served and take the lowest action numbers. Ties between
    distinct optima keep the first one reached folding Tx nodes in ascending order.
    """
    return _P1Search(qs, list(requests), slot).run()


def qs_utility(qs: int, requests: Iterable[Request], slot: SlotState) -> float:
    """U_q of a request set: the optimal P1 utility, 0 for the empty set."""
    return solve_p1(qs, requests, slot).utility


def exhaustive_p1(qs: int, requests: Iterable[Request], slot: SlotState) -> ActionPlan:
    """Brute-force P1 over all 5^|requests| action-or-drop assignments."""
    requests = sorted(requests, key=lambda r: r.id)
    fidelities = {
        r.id: {
            action: e2e_fidelity(
                float(slot.f_tx[r.tx, qs]), float(slot.f_rx[qs, r.rx]), action
            )
            for action in ACTIONS
        }
        for r in requests
    }

    best_value, best_choice = 0.0, tuple(None for _ in requests)
    for choice in itertools.product((*ACTIONS, None), repeat=len(requests)):
        used_tx: dict[int, int] = defaultdict(int)
        used_rx: dict[int, int] = defaultdict(int)
        served = []
        for request, action in zip(requests, choice):
            if action is None:
                continue
            fidelity = fidelities[request.id][action]
            if fidelity < request.f_min:
                break
            used_tx[request.tx] += action.alpha_tx
            used_rx[request.rx] += action.alpha_rx
            served.append(fidelity)
        else:
            if all(used <= slot.n_tx[k, qs] for k, used in used_tx.items()) and all(
                used <= slot.n_rx[qs, m] for m, used in used_rx.items()
            ):
                value = math.fsum(served)
                if value > best_value + SEARCH_EPS:
                    best_value, best_choice = value, choice

    plan = ActionPlan(qs=qs)
    for request, action in zip(requests, best_choice):
        plan.choices[request.id] = action
        if action is not None:
            plan.fidelities[request.id] = fidelities[request.id][action]
    return plan


def verify_plan(plan: ActionPlan, requests: Iterable[Request], slot: SlotState) -> None:
    """Checks f_min and the per-node capacity constraints of a plan.

    Raises:
        PlanInvariantError: on the first violated constraint
    """
    by_id = {r.id: r for r in requests}
    if set(plan.choices) != set(by_id):
        raise PlanInvariantError(f"QS {plan.qs}: plan covers {sorted(plan.choices)}")

    used_tx: dict[int, int] = defaultdict(int)
    used_rx: dict[int, int] = defaultdict(int)
    for rid, action in plan.choices.items():
        if action is None:
            continue
        request = by_id[rid]
        expected = e2e_fidelity(
            float(slot.f_tx[request.tx, plan.qs]), float(slot.f_rx[plan.qs, request.rx]), action
        )
        if not math.isclose(plan.fidelities[rid], expected, abs_tol=1e-12):
            raise PlanInvariantError(f"QS {plan.qs}: request {rid} fidelity mismatch")
        if expected < request.f_min:
            raise PlanInvariantError(f"QS {plan.qs}: request {rid} served below f_min")
        used_tx[request.tx] += action.alpha_tx
        used_rx[request.rx] += action.alpha_rx

    for k, used in used_tx.items():
        if used > slot.n_tx[k, plan.qs]:
            raise PlanInvariantError(f"QS {plan.qs}: Tx node {k} uses {used} pairs")
    for m, used in used_rx.items():
        if used > slot.n_rx[plan.qs, m]:
            raise PlanInvariantError(f"QS {plan.qs}: Rx node {m} uses {used} pairs")


class ActionScheduler:
    """Memoised P1 solver bound to one slot and request set.

    The memo key is (QS, associated request ids); one instance serves one run and is
    not shared across threads.
    """

    def __init__(
        self,
        slot: SlotState,
        requests: Iterable[Request],
        check_invariants: bool = False,
    ):
        self.slot = slot
        self.requests = {r.id: r for r in requests}
        self.check_invariants = check_invariants
        self._plans: dict[tuple[int, frozenset[int]], ActionPlan] = {}
        self.solves = 0

    def plan(self, qs: int, request_ids: Iterable[int]) -> ActionPlan:
        """The optimal plan of `qs` for the given associated requests."""
        key = (qs, frozenset(request_ids))
        if key in self._plans:
            return self._plans[key]

        members = [self.requests[rid] for rid in sorted(key[1])]
        plan = solve_p1(qs, members, self.slot)
        self.solves += 1

        if self.check_invariants:
            verify_plan(plan, members, self.slot)
            if len(members) < EXHAUSTIVE_P1_BELOW:
                oracle = exhaustive_p1(qs, members, self.slot)
                if not math.isclose(plan.utility, oracle.utility, abs_tol=1e-9):
                    raise PlanInvariantError(
                        f"QS {qs}: utility {plan.utility} differs from exhaustive "
                        f"{oracle.utility} for requests {sorted(key[1])}"
                    )

        self._plans[key] = plan
        return plan

    def utility(self, qs: int, request_ids: Iterable[int]) -> float:
        """U_q of the given associated requests."""
        return self.plan(qs, request_ids).utility
