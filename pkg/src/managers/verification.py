#!/usr/bin/env python3
# Copyright 2024 Canonical Ltd.
# See LICENSE file for licensing details.

"""Executable property suites: fidelity identities, sampling and solver oracles, stability.

Each suite returns a SuiteResult; failing suites carry the first counterexample,
including the trial seed so the instance can be replayed.
"""

import logging
import math
from collections.abc import Callable, Sequence
from typing import NamedTuple

import numpy as np
from scipy import stats

from core import fidelity
from core.fidelity import ACTIONS, Action, FidelityDomainError
from core.models import Request, SlotState
from core.network import bernoulli_counts, derive_trial_seed, sample_instance
from core.structured_config import MatchConfig, ScenarioParams
from managers.baselines import exhaustive_optimum, solve_greedy, solve_optimal
from managers.matching import is_swap_stable, rqsa
from managers.scheduler import (
    ActionScheduler,
    PlanInvariantError,
    exhaustive_p1,
    solve_p1,
    verify_plan,
)

logger = logging.getLogger(__name__)

ORACLE_TOL = 1e-9
BINOMIAL_P_VALUE = 0.001
STABILITY_R_VALUES = (10, 20, 40)

DEFAULT_CASES = {
    "fidelity": 10_000,
    "binomial": 100_000,
    "p1-oracle": 1000,
    "optimal-oracle": 300,
    "stability": 100,
}
SUITES = tuple(DEFAULT_CASES)


class SuiteResult(NamedTuple):
    """Outcome of one verification suite."""

    name: str
    passed: bool
    cases: int
    witness: str | None = None


def random_small_instance(
    rng: np.random.Generator,
    max_k: int = 3,
    max_m: int = 3,
    max_q: int = 2,
    max_r: int = 4,
    max_budget: int = 4,
) -> tuple[SlotState, list[Request]]:
    """A small random slot and request set, sized for brute-force oracles."""
    k, m, q = (int(rng.integers(1, top + 1)) for top in (max_k, max_m, max_q))
    r = int(rng.integers(0, max_r + 1))
    slot = SlotState(
        n_tx=rng.integers(0, max_budget + 1, size=(k, q)),
        f_tx=rng.uniform(0.6, 1.0, size=(k, q)),
        n_rx=rng.integers(0, max_budget + 1, size=(q, m)),
        f_rx=rng.uniform(0.6, 1.0, size=(q, m)),
    )
    requests = [
        Request(
            id=i,
            tx=int(rng.integers(0, k)),
            rx=int(rng.integers(0, m)),
            f_min=float(rng.uniform(0.5, 0.9)),
        )
        for i in range(r)
    ]
    return slot, requests


def _describe(seed: int, slot: SlotState, requests: Sequence[Request]) -> str:
    return f"seed={seed} K={slot.k} M={slot.m} Q={slot.q} R={len(requests)}"


def fidelity_suite(cases: int = DEFAULT_CASES["fidelity"], seed: int = 0) -> SuiteResult:
    """Swap symmetry and identity, distillation fixed points and gain, action ordering."""
    rng = np.random.default_rng(seed)
    checks = 0

    def fail(message: str) -> SuiteResult:
        return SuiteResult("fidelity", False, checks, message)

    try:
        for point in (0.25, 0.5, 1.0):
            checks += 1
            value = fidelity.distill_fidelity(point)
            if abs(value - point) > ORACLE_TOL:
                return fail(f"distill_fidelity({point}) = {value!r}, expected a fixed point")

        for _ in range(cases):
            checks += 1
            a, b = (float(x) for x in rng.uniform(0.25, 1.0, size=2))
            ab, ba = fidelity.swap_fidelity(a, b), fidelity.swap_fidelity(b, a)
            if abs(ab - ba) > ORACLE_TOL:
                return fail(f"swap_fidelity({a!r}, {b!r}) = {ab!r} but reversed {ba!r}")
            if abs(fidelity.swap_fidelity(a, 1.0) - a) > ORACLE_TOL:
                return fail(f"swap_fidelity({a!r}, 1.0) != {a!r}")
            if not 0.25 - ORACLE_TOL <= ab <= 1.0 + ORACLE_TOL:
                return fail(f"swap_fidelity({a!r}, {b!r}) = {ab!r} outside [0.25, 1]")

            f_tx, f_rx = (float(x) for x in rng.uniform(0.5, 1.0, size=2))
            if f_tx in (0.5, 1.0):
                continue
            distilled = fidelity.distill_fidelity(f_tx)
            if distilled <= f_tx:
                return fail(f"distill_fidelity({f_tx!r}) = {distilled!r} does not improve")

            values = {
                action: fidelity.e2e_fidelity(f_tx, f_rx, action) for action in ACTIONS
            }
            both, direct = values[Action.BOTH_DISTILL_SWAP], values[Action.DIRECT_SWAP]
            for single in (Action.TX_DISTILL_SWAP, Action.RX_DISTILL_SWAP):
                if not both + ORACLE_TOL >= values[single] >= direct - ORACLE_TOL:
                    listed = ", ".join(f"{a.name}={v!r}" for a, v in values.items())
                    return fail(f"action ordering broken at f_tx={f_tx!r} f_rx={f_rx!r}: {listed}")
    except FidelityDomainError as e:
        return fail(f"domain error: {e}")

    return SuiteResult("fidelity", True, checks)


def binomial_suite(
    draws: int = DEFAULT_CASES["binomial"],
    seed: int = 0,
    n: int = 10,
    distance_km: float = 0.54,
    l0_km: float = 0.54,
) -> SuiteResult:
    """Chi-square test of Bernoulli-realized link counts against Binomial(n, exp(-d/L0))."""
    p = math.exp(-distance_km / l0_km)
    counts = bernoulli_counts(np.full(draws, p), n, np.random.default_rng(seed))
    observed = np.bincount(counts, minlength=n + 1).astype(float)
    expected = draws * stats.binom.pmf(np.arange(n + 1), n, p)

    # sparse tail cells are pooled so every cell expects at least 5 draws
    dense = expected >= 5
    observed = np.append(observed[dense], observed[~dense].sum())
    expected = np.append(expected[dense], expected[~dense].sum())
    if expected[-1] == 0:
        observed, expected = observed[:-1], expected[:-1]
    expected *= observed.sum() / expected.sum()

    result = stats.chisquare(observed, expected)
    passed = bool(result.pvalue > BINOMIAL_P_VALUE)
    witness = None if passed else f"seed={seed} n={n} p={p!r} p-value={result.pvalue:.3g}"
    return SuiteResult("binomial", passed, draws, witness)


def p1_oracle_suite(cases: int = DEFAULT_CASES["p1-oracle"], seed: int = 0) -> SuiteResult:
    """solve_p1 against 5^R enumeration on instances with up to 4 requests and budgets 4."""
    for index in range(cases):
        trial_seed = derive_trial_seed(seed, index)
        slot, requests = random_small_instance(np.random.default_rng(trial_seed))
        for qs in range(slot.q):
            plan = solve_p1(qs, requests, slot)
            oracle = exhaustive_p1(qs, requests, slot)
            witness = None
            try:
                verify_plan(plan, requests, slot)
            except PlanInvariantError as e:
                witness = str(e)
            else:
                if abs(plan.utility - oracle.utility) > ORACLE_TOL:
                    witness = f"QS {qs}: utility {plan.utility!r} vs exhaustive {oracle.utility!r}"

            if witness is not None:
                return SuiteResult(
                    "p1-oracle",
                    False,
                    index + 1,
                    f"{witness}; {_describe(trial_seed, slot, requests)}",
                )

    return SuiteResult("p1-oracle", True, cases)


def optimal_oracle_suite(
    cases: int = DEFAULT_CASES["optimal-oracle"], seed: int = 0
) -> SuiteResult:
    """solve_optimal against (Q+1)^R enumeration with R <= 6, Q <= 2 and budgets <= 3."""
    for index in range(cases):
        trial_seed = derive_trial_seed(seed, index)
        slot, requests = random_small_instance(
            np.random.default_rng(trial_seed), max_r=6, max_budget=3
        )
        solution = solve_optimal(requests, slot, budget=math.inf)
        oracle = exhaustive_optimum(requests, slot)
        witness = None
        if not solution.optimal_flag:
            witness = "search did not complete"
        elif abs(solution.total_utility - oracle.total_utility) > ORACLE_TOL:
            witness = f"utility {solution.total_utility!r} vs exhaustive {oracle.total_utility!r}"
        else:
            associations = solution.matching.associations(slot.q)
            by_id = {r.id: r for r in requests}
            try:
                for qs, plan in solution.plans.items():
                    verify_plan(plan, [by_id[rid] for rid in associations[qs]], slot)
            except PlanInvariantError as e:
                witness = str(e)

        if witness is not None:
            return SuiteResult(
                "optimal-oracle",
                False,
                index + 1,
                f"{witness}; {_describe(trial_seed, slot, requests)}",
            )

    return SuiteResult("optimal-oracle", True, cases)


def stability_suite(
    cases: int = DEFAULT_CASES["stability"],
    r_values: Sequence[int] = STABILITY_R_VALUES,
    scenario: ScenarioParams | None = None,
    config: MatchConfig | None = None,
) -> SuiteResult:
    """Every RQSA output is swap stable, converged, and at least as good as greedy."""
    scenario = scenario or ScenarioParams()
    config = config or MatchConfig()
    checked = 0
    for r in r_values:
        for index in range(cases):
            trial_seed = derive_trial_seed(scenario.seed, index)
            _, slot, requests = sample_instance(scenario, r, trial_seed)
            scheduler = ActionScheduler(slot, requests, check_invariants=True)
            checked += 1

            witness = None
            try:
                result = rqsa(requests, slot, config, scheduler)
                report = is_swap_stable(result.matching, requests, slot, config, scheduler)
                greedy = solve_greedy(requests, slot, scheduler)
            except PlanInvariantError as e:
                witness = str(e)
            else:
                utility = math.fsum(result.plans[qs].utility for qs in sorted(result.plans))
                if not result.converged:
                    witness = "swap phase hit its pass limit"
                elif not report.stable:
                    witness = f"beneficial move {report.witness}"
                elif utility < greedy.total_utility - ORACLE_TOL:
                    witness = f"utility {utility!r} below greedy {greedy.total_utility!r}"

            if witness is not None:
                return SuiteResult(
                    "stability",
                    False,
                    checked,
                    f"{witness}; seed={trial_seed} scenario={scenario.scenario_id} R={r}",
                )

    return SuiteResult("stability", True, checked)


def run_suites(
    names: Sequence[str] = SUITES,
    cases: int | None = None,
    seed: int = 0,
    config: MatchConfig | None = None,
    scenario: ScenarioParams | None = None,
) -> list[SuiteResult]:
    """Runs the named suites; `cases` overrides every suite's default case count.

    The binomial suite always uses its full draw count.
    """
    runners: dict[str, Callable[[], SuiteResult]] = {
        "fidelity": lambda: fidelity_suite(cases or DEFAULT_CASES["fidelity"], seed),
        "binomial": lambda: binomial_suite(DEFAULT_CASES["binomial"], seed),
        "p1-oracle": lambda: p1_oracle_suite(cases or DEFAULT_CASES["p1-oracle"], seed),
        "optimal-oracle": lambda: optimal_oracle_suite(
            cases or DEFAULT_CASES["optimal-oracle"], seed
        ),
        "stability": lambda: stability_suite(
            cases or DEFAULT_CASES["stability"],
            scenario=scenario or ScenarioParams(seed=seed),
            config=config,
        ),
    }

    results = []
    for name in names:
        result = runners[name]()
        if result.passed:
            logger.info(f"Suite {name}: passed over {result.cases} cases")
        else:
            logger.error(f"Suite {name}: FAILED after {result.cases} cases: {result.witness}")
        results.append(result)
    return results
