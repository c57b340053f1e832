#!/usr/bin/env python3
# Copyright 2024 Canonical Ltd.
# See LICENSE file for licensing details.

"""Monte Carlo experiment runner: single-slot trials, sweeps and result tables.

Every trial samples one instance from its own seed and runs all requested
algorithms on it. Sweeps enumerate scenarios x R values x trial indices in a fixed
order, so the raw table does not depend on how many worker processes ran it.
"""

import json
import logging
import math
import time
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from typing import NamedTuple

import pandas as pd

from core.models import Request, SlotState, Solution, TrialMetrics
from core.network import derive_trial_seed, instance_fingerprint, sample_instance, trial_streams
from core.structured_config import MatchConfig, ScenarioParams, SweepSpec
from core.workload import WorkloadBase
from literals import (
    AGGREGATE_COLUMNS,
    ALGORITHMS,
    RAW_COLUMNS,
    SCALABILITY_SHAPES,
    VERSION,
    AlgorithmName,
    OptimalMarker,
    OutputFormat,
)
from managers.baselines import solve_greedy, solve_optimal, solve_random
from managers.matching import rqsa
from managers.scheduler import ActionScheduler

logger = logging.getLogger(__name__)

# raw columns read back as text; fingerprints can look numeric
TEXT_COLUMNS = {
    "scenario": str,
    "algorithm": str,
    "optimal_proven": str,
    "instance_fingerprint": str,
}


class TrialTask(NamedTuple):
    """One unit of sweep work, picklable for worker processes."""

    scenario: ScenarioParams
    r: int
    seed: int
    sweep: SweepSpec
    matching: MatchConfig


def _served_fraction(solution: Solution, r: int) -> float:
    # vacuously all served
    return 1.0 if r == 0 else solution.served_count / r


def _optimal_marker(solution: Solution) -> OptimalMarker:
    return "true" if solution.optimal_flag else "false"


def run_trial(
    scenario: ScenarioParams,
    r: int,
    seed: int,
    algorithms: Iterable[AlgorithmName] | None = None,
    sweep: SweepSpec | None = None,
    matching: MatchConfig | None = None,
    check_invariants: bool = False,
) -> list[TrialMetrics]:
    """Samples one instance from `seed` and runs each algorithm on it.

    Returns:
        One metrics row per algorithm, in canonical algorithm order
    """
    sweep = sweep or SweepSpec()
    matching = matching or MatchConfig()
    wanted = set(algorithms or sweep.algorithms)

    topology, slot, requests = sample_instance(scenario, r, seed)
    fingerprint = instance_fingerprint(topology, slot, requests)
    scheduler = ActionScheduler(slot, requests, check_invariants=check_invariants)

    runners: dict[AlgorithmName, Callable[[], tuple[Solution, int]]] = {
        "rqsa": lambda: _run_rqsa(requests, slot, matching, scheduler),
        "greedy": lambda: (solve_greedy(requests, slot, scheduler), 0),
        "random": lambda: (
            solve_random(requests, slot, trial_streams(seed).algorithm, scheduler),
            0,
        ),
        "optimal": lambda: (
            solve_optimal(requests, slot, sweep.optimal_budget_secs, sweep.objective),
            0,
        ),
    }

    rows = []
    for name in ALGORITHMS:
        if name not in wanted:
            continue

        row = TrialMetrics(
            seed=seed,
            scenario=scenario.scenario_id,
            K=scenario.k,
            M=scenario.m,
            Q=scenario.q,
            R=r,
            algorithm=name,
            served_fraction=math.nan,
            total_fidelity=math.nan,
            instance_fingerprint=fingerprint,
        )
        if name == "optimal" and r > sweep.optimal_rcap:
            row.optimal_proven = "skipped"
            rows.append(row)
            continue

        start = time.perf_counter()
        solution, swap_count = runners[name]()
        elapsed_ms = (time.perf_counter() - start) * 1000

        row.served_fraction = _served_fraction(solution, r)
        row.total_fidelity = solution.total_utility
        row.swap_count = swap_count
        row.runtime_ms = elapsed_ms if sweep.record_runtime else 0.0
        if name == "optimal":
            row.optimal_proven = _optimal_marker(solution)
        rows.append(row)

    return rows


def _run_rqsa(
    requests: Sequence[Request], slot: SlotState, config: MatchConfig, scheduler: ActionScheduler
) -> tuple[Solution, int]:
    result = rqsa(requests, slot, config, scheduler)
    return Solution(matching=result.matching, plans=result.plans), len(result.swaps)


def _run_task(task: TrialTask) -> list[TrialMetrics]:
    return run_trial(task.scenario, task.r, task.seed, sweep=task.sweep, matching=task.matching)


def sweep_scenarios(spec: SweepSpec, base: ScenarioParams) -> list[ScenarioParams]:
    """Scenarios a sweep runs: its own list, or the base scenario alone."""
    return list(spec.scenarios) or [base]


def sweep_tasks(
    spec: SweepSpec, base: ScenarioParams, matching: MatchConfig | None = None
) -> list[TrialTask]:
    """Every (scenario, R, trial) of a sweep in canonical order."""
    matching = matching or MatchConfig()
    return [
        TrialTask(scenario, r, derive_trial_seed(scenario.seed, index), spec, matching)
        for scenario in sweep_scenarios(spec, base)
        for r in spec.r_values
        for index in range(spec.trials)
    ]


def run_sweep(
    spec: SweepSpec, base: ScenarioParams | None = None, matching: MatchConfig | None = None
) -> pd.DataFrame:
    """Runs the Cartesian product of scenarios, R values and trials.

    Returns:
        The raw metrics table in (scenario, R, trial, algorithm) order
    """
    tasks = sweep_tasks(spec, base or ScenarioParams(), matching)
    for scenario in sweep_scenarios(spec, base or ScenarioParams()):
        logger.info(
            f"Scenario {scenario.scenario_id}: {len(spec.r_values)} R values x "
            f"{spec.trials} trials, algorithms {','.join(spec.algorithms)}"
        )

    if spec.parallelism > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=spec.parallelism) as executor:
            # map keeps submission order, whichever worker finishes first
            results = list(executor.map(_run_task, tasks, chunksize=max(1, spec.trials // 4)))
    else:
        results = [_run_task(task) for task in tasks]

    return raw_table(row for rows in results for row in rows)


def raw_table(metrics: Iterable[TrialMetrics]) -> pd.DataFrame:
    """Metrics rows as a DataFrame with the raw column layout."""
    return pd.DataFrame([m.as_row() for m in metrics], columns=RAW_COLUMNS)


def aggregate(raw: pd.DataFrame) -> pd.DataFrame:
    """Mean and standard error per (scenario, R, algorithm); skipped rows are excluded."""
    measured = raw.dropna(subset=["served_fraction", "total_fidelity"])
    if measured.empty:
        return pd.DataFrame(columns=AGGREGATE_COLUMNS)

    grouped = measured.groupby(["scenario", "R", "algorithm"], sort=False)
    table = grouped.agg(
        mean_served=("served_fraction", "mean"),
        se_served=("served_fraction", "sem"),
        mean_fidelity=("total_fidelity", "mean"),
        se_fidelity=("total_fidelity", "sem"),
        n_trials=("served_fraction", "size"),
    ).reset_index()

    # a single trial has no spread estimate
    table[["se_served", "se_fidelity"]] = table[["se_served", "se_fidelity"]].fillna(0.0)
    return table[AGGREGATE_COLUMNS]


def scalability_scenarios(base: ScenarioParams | None = None) -> list[ScenarioParams]:
    """The three network shapes (K>M, K=M, K<M) at Q=3, other parameters from `base`."""
    base = base or ScenarioParams()
    return [
        base.copy(update={"k": k, "m": m, "q": 3, "name": f"scalability-K{k}-M{m}-Q3"})
        for k, m in SCALABILITY_SHAPES
    ]


def scalability_spec(
    spec: SweepSpec | None = None, base: ScenarioParams | None = None
) -> SweepSpec:
    """`spec` with its scenarios replaced by the scalability shapes."""
    return (spec or SweepSpec()).copy(update={"scenarios": scalability_scenarios(base)})


def scalability_suite(
    spec: SweepSpec | None = None,
    base: ScenarioParams | None = None,
    matching: MatchConfig | None = None,
) -> pd.DataFrame:
    """Runs the sweep over the three scalability scenarios."""
    return run_sweep(scalability_spec(spec, base), base, matching)


def run_metadata(spec: SweepSpec, base: ScenarioParams) -> dict:
    """Seeds, scenarios and assumption labels of a run."""
    assumed = {scenario.name for scenario in scalability_scenarios()}
    return {
        "version": VERSION,
        "r_values": list(spec.r_values),
        "trials": spec.trials,
        "algorithms": list(spec.algorithms),
        "objective": spec.objective,
        "optimal_rcap": spec.optimal_rcap,
        "scenarios": [
            {
                "id": scenario.scenario_id,
                "master_seed": scenario.seed,
                "assumed": scenario.name in assumed,
                "params": json.loads(scenario.json(by_alias=True)),
            }
            for scenario in sweep_scenarios(spec, base)
        ],
    }


def render_table(table: pd.DataFrame, fmt: OutputFormat) -> str:
    """CSV with round-trip float repr, or a JSON array of records."""
    if fmt == "json":
        return table.to_json(orient="records", double_precision=15, indent=2)
    return table.to_csv(index=False, lineterminator="\n")


def read_raw(path: str) -> pd.DataFrame:
    """Reads a raw CSV back with the dtypes it was written with."""
    raw = pd.read_csv(path, dtype=TEXT_COLUMNS, float_precision="round_trip")
    raw["optimal_proven"] = raw["optimal_proven"].fillna("")
    return raw[RAW_COLUMNS]


def write_results(
    workload: WorkloadBase,
    raw: pd.DataFrame,
    fmt: OutputFormat = "csv",
    metadata: dict | None = None,
) -> pd.DataFrame:
    """Writes the raw and aggregate tables, and metadata if given.

    Returns:
        The aggregate table

    Raises:
        OSError: when the output directory is not writable
    """
    workload.ensure_dir()
    table = aggregate(raw)
    workload.write(render_table(raw, fmt), workload.paths.raw(fmt))
    workload.write(render_table(table, fmt), workload.paths.aggregate(fmt))
    if metadata is not None:
        workload.write(json.dumps(metadata, indent=2, sort_keys=True), workload.paths.metadata)

    logger.info(f"Wrote {len(raw)} raw rows and {len(table)} aggregate rows")
    return table
