#!/usr/bin/env python3
# Copyright 2024 Canonical Ltd.
# See LICENSE file for licensing details.

import time

import numpy as np
import pytest

from core.fidelity import ACTIONS, Action, swap_fidelity
from core.models import ActionPlan, Request, SlotState
from managers import scheduler as scheduler_module
from managers.scheduler import (
    ActionScheduler,
    PlanInvariantError,
    exhaustive_p1,
    feasible_actions,
    grouped_bound,
    qs_utility,
    solve_p1,
    verify_plan,
)
from managers.verification import random_small_instance


def test_feasible_actions_none_reach_high_fmin(uniform_slot):
    slot = uniform_slot(1, 1, 1, budget=2, fid=0.85)
    assert feasible_actions(0, Request(0, 0, 0, f_min=0.99), slot) == []


def test_feasible_actions_single_pair_budgets(uniform_slot):
    slot = uniform_slot(1, 1, 1, budget=1, fid=0.9)
    options = feasible_actions(0, Request(0, 0, 0, f_min=0.5), slot)

    assert [action for action, _ in options] == [Action.DIRECT_SWAP]
    assert options[0][1] == pytest.approx(0.813333, abs=1e-6)


def test_feasible_actions_perfect_pairs_in_action_order(uniform_slot):
    slot = uniform_slot(1, 1, 1, budget=2, fid=1.0)
    options = feasible_actions(0, Request(0, 0, 0, f_min=0.25), slot)

    assert [action for action, _ in options] == list(ACTIONS)
    assert all(fid == pytest.approx(1.0) for _, fid in options)


def test_feasible_actions_sorted_by_fidelity(uniform_slot):
    slot = uniform_slot(1, 1, 1, budget=2, fid=0.8)
    options = feasible_actions(0, Request(0, 0, 0, f_min=0.5), slot)

    assert [action for action, _ in options] == [
        Action.BOTH_DISTILL_SWAP,
        Action.TX_DISTILL_SWAP,
        Action.RX_DISTILL_SWAP,
        Action.DIRECT_SWAP,
    ]


def test_grouped_bound_keeps_largest_per_group():
    values = [0.9, 0.8, 0.7, 0.6]
    assert grouped_bound(values, ["a", "a", "b", "b"], {"a": 1, "b": 2}) == pytest.approx(2.2)
    assert grouped_bound(values, ["a", "a", "b", "b"], {"a": 0, "b": 1}) == pytest.approx(0.7)


def test_solve_p1_empty(uniform_slot):
    plan = solve_p1(0, [], uniform_slot(1, 1, 1))
    assert plan.choices == {} and plan.utility == 0
    assert qs_utility(0, [], uniform_slot(1, 1, 1)) == 0


def test_solve_p1_single_request_needs_both_distillations(uniform_slot):
    slot = uniform_slot(1, 1, 1, budget=2, fid=0.8)
    plan = solve_p1(0, [Request(0, 0, 0, f_min=0.7)], slot)

    assert plan.choices == {0: Action.BOTH_DISTILL_SWAP}
    assert plan.utility == pytest.approx(0.711227, abs=1e-5)


def test_solve_p1_shared_tx_distills_on_rx_side(uniform_slot):
    slot = uniform_slot(1, 1, 2, budget=2, fid=0.8)
    requests = [Request(0, 0, 0, f_min=0.6), Request(1, 0, 1, f_min=0.6)]
    plan = solve_p1(0, requests, slot)

    # each Rx node affords distillation, the shared Tx node only one pair per request
    assert plan.choices == {0: Action.RX_DISTILL_SWAP, 1: Action.RX_DISTILL_SWAP}
    assert plan.utility == pytest.approx(2 * 0.681310, abs=1e-5)
    verify_plan(plan, requests, slot)


def test_solve_p1_drops_unservable(uniform_slot):
    slot = uniform_slot(1, 1, 2, budget=2, fid=0.9)
    requests = [Request(0, 0, 0, f_min=0.99), Request(1, 0, 1, f_min=0.5)]
    plan = solve_p1(0, requests, slot)

    assert plan.choices[0] is None
    assert plan.served == [1]
    assert plan.utility == pytest.approx(plan.fidelities[1])


def test_solve_p1_matches_exhaustive_on_random_instances():
    for seed in range(200):
        slot, requests = random_small_instance(np.random.default_rng(seed))
        for qs in range(slot.q):
            plan = solve_p1(qs, requests, slot)
            verify_plan(plan, requests, slot)
            assert plan.utility == pytest.approx(
                exhaustive_p1(qs, requests, slot).utility, abs=1e-9
            )


def test_solve_p1_monotone_in_budgets():
    rng = np.random.default_rng(9)
    for _ in range(50):
        slot, requests = random_small_instance(rng, max_budget=3)
        richer = SlotState(
            n_tx=slot.n_tx + 1, f_tx=slot.f_tx, n_rx=slot.n_rx + 1, f_rx=slot.f_rx
        )
        assert qs_utility(0, requests, richer) >= qs_utility(0, requests, slot) - 1e-12


def test_qs_utility_monotone_under_removal():
    rng = np.random.default_rng(10)
    for _ in range(50):
        slot, requests = random_small_instance(rng)
        if not requests:
            continue
        full = qs_utility(0, requests, slot)
        for i in range(len(requests)):
            subset = requests[:i] + requests[i + 1 :]
            assert qs_utility(0, subset, slot) <= full + 1e-12


def test_verify_plan_rejects_overuse(uniform_slot):
    slot = uniform_slot(1, 1, 2, budget=1, fid=0.9)
    requests = [Request(0, 0, 0, f_min=0.5), Request(1, 0, 1, f_min=0.5)]
    fid = swap_fidelity(0.9, 0.9)
    plan = ActionPlan(
        qs=0,
        choices={0: Action.DIRECT_SWAP, 1: Action.DIRECT_SWAP},
        fidelities={0: fid, 1: fid},
    )
    with pytest.raises(PlanInvariantError):
        verify_plan(plan, requests, slot)


def test_verify_plan_rejects_fmin_violation(uniform_slot):
    slot = uniform_slot(1, 1, 1, budget=1, fid=0.9)
    plan = solve_p1(0, [Request(0, 0, 0, f_min=0.5)], slot)
    with pytest.raises(PlanInvariantError):
        verify_plan(plan, [Request(0, 0, 0, f_min=0.9)], slot)


def test_scheduler_memoises_per_request_set(mocker, uniform_slot):
    slot = uniform_slot(2, 2, 2)
    requests = [Request(0, 0, 0, 0.5), Request(1, 1, 1, 0.5)]
    spy = mocker.spy(scheduler_module, "solve_p1")
    scheduler = ActionScheduler(slot, requests)

    first = scheduler.utility(0, [0, 1])
    assert scheduler.utility(0, {1, 0}) == first
    scheduler.utility(1, [0, 1])

    assert spy.call_count == 2
    assert scheduler.solves == 2


def test_scheduler_invariant_check_catches_suboptimal_plan(mocker, uniform_slot):
    slot = uniform_slot(1, 1, 1)
    mocker.patch(
        "managers.scheduler.solve_p1", return_value=ActionPlan(qs=0, choices={0: None})
    )
    scheduler = ActionScheduler(slot, [Request(0, 0, 0, 0.5)], check_invariants=True)

    with pytest.raises(PlanInvariantError):
        scheduler.plan(0, [0])


def test_solve_p1_repeated_requests_stay_fast(uniform_slot):
    """Checks many interchangeable requests are solved exactly without enumerating them."""
    slot = uniform_slot(2, 1, 2, budget=10, fid=0.9)
    requests = [Request(i, i % 2, (i // 2) % 2, f_min=0.5) for i in range(20)]

    started = time.perf_counter()
    plan = solve_p1(0, requests, slot)

    assert time.perf_counter() - started < 1.0
    # every request direct: any distillation costs a whole extra request per node
    assert plan.served == list(range(20))
    assert plan.utility == pytest.approx(20 * swap_fidelity(0.9, 0.9))
    verify_plan(plan, requests, slot)


def test_solve_p1_serves_lowest_ids_of_identical_requests(uniform_slot):
    slot = uniform_slot(1, 1, 1, budget=2, fid=0.9)
    requests = [Request(i, 0, 0, f_min=0.5) for i in range(3)]

    plan = solve_p1(0, requests, slot)

    assert plan.choices == {0: Action.DIRECT_SWAP, 1: Action.DIRECT_SWAP, 2: None}


def test_solve_p1_lower_ids_take_lower_actions(uniform_slot):
    slot = uniform_slot(1, 1, 1, budget=3, fid=0.8)
    requests = [Request(0, 0, 0, f_min=0.6), Request(1, 0, 0, f_min=0.6)]

    plan = solve_p1(0, requests, slot)

    # direct plus both-distill beats one distillation on each side
    assert plan.choices == {0: Action.DIRECT_SWAP, 1: Action.BOTH_DISTILL_SWAP}
    assert plan.utility == pytest.approx(0.653333 + 0.711227, abs=1e-5)


def test_solve_p1_matches_exhaustive_with_duplicates():
    rng = np.random.default_rng(21)
    for _ in range(40):
        slot, requests = random_small_instance(rng)
        copies = [Request(r.id + 10, r.tx, r.rx, r.f_min) for r in requests[:2]]
        members = requests[:3] + copies
        for qs in range(slot.q):
            assert solve_p1(qs, members, slot).utility == pytest.approx(
                exhaustive_p1(qs, members, slot).utility, abs=1e-9
            )
