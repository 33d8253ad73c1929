"""Scenario orchestration: assign once, route every timeslot, account energy.

A scenario pairs an assignment strategy with a routing strategy over one
workload.  VMs are never migrated; the per-timeslot demand sets follow
from the single assignment, and every timeslot is routed independently.
Comparisons normalize each run against the greedy-assignment /
shortest-path run on the same workload.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .assignment import STRATEGIES, assign
from .errors import ConfigError
from .power import PowerParams, switch_power
from .routing import ROUTERS, ecmp_route, eer, sp_route
from .topology import AGG, CORE, TOR, build_fat_tree
from .workload import (
    WorkloadConfig,
    demands_at,
    generate_workload,
    load_workload,
)

REPORT_FORMAT_VERSION = 1

STRATEGY_GRID = (
    ("greedy", "sp"),
    ("opt_greedy", "sp"),
    ("greedy", "eer"),
    ("eea", "eer"),
    ("opt_eea", "eer"),
)

TABLE_COLUMNS = (
    "scenario",
    "utilization",
    "seed",
    "total_energy_wt",
    "ratio_to_baseline",
    "runtime_ms",
    "violations",
)


@dataclass(frozen=True)
class Scenario:
    """One (assignment strategy, routing strategy) run over a workload."""

    k: int
    assign_strategy: str
    route_strategy: str
    seed: int = 0
    utilization: float | None = None
    workload_seed: int | None = None
    workload_path: str | None = None
    horizon: int = 100
    server_capacity: int = 2
    timeslot_seconds: float = 60.0
    power: PowerParams = field(default_factory=PowerParams)

    def __post_init__(self):
        if self.assign_strategy not in STRATEGIES:
            raise ConfigError(
                f"assign strategy must be one of {STRATEGIES}, "
                f"got {self.assign_strategy!r}"
            )
        if self.route_strategy not in ROUTERS:
            raise ConfigError(
                f"route strategy must be one of {ROUTERS}, got {self.route_strategy!r}"
            )
        if self.stochastic and self.seed is None:
            raise ConfigError(
                f"{self.label} uses randomness and needs an explicit seed"
            )

    @property
    def label(self) -> str:
        return f"{self.assign_strategy}-{self.route_strategy}"

    @property
    def stochastic(self) -> bool:
        return self.route_strategy == "ecmp" or self.assign_strategy in (
            "eea",
            "opt_eea",
        )

    def describe(self) -> dict:
        return {
            "label": self.label,
            "k": self.k,
            "assign": self.assign_strategy,
            "route": self.route_strategy,
            "seed": self.seed,
            "utilization": self.utilization,
            "workload_seed": self.workload_seed,
            "workload_path": self.workload_path,
            "horizon": self.horizon,
            "server_capacity": self.server_capacity,
            "timeslot_seconds": self.timeslot_seconds,
            "power": {
                "sigma": self.power.sigma,
                "mu": self.power.mu,
                "alpha": self.power.alpha,
                "capacity": self.power.capacity,
            },
        }


@dataclass(frozen=True)
class EnergyReport:
    """Energy accounting for one scenario run.

    Totals are watt-timeslots; total_energy_joules applies the
    configured timeslot duration for presentation.
    """

    scenario: dict
    total_energy_wt: float
    per_timeslot_watts: tuple[float, ...]
    layer_breakdown: dict[str, float]
    active_switches: tuple[int, ...]
    runtime_ms: float
    violations: dict[int, tuple[int, ...]]

    @property
    def total_energy_joules(self) -> float:
        return self.total_energy_wt * self.scenario["timeslot_seconds"]

    def fingerprint(self) -> dict:
        """Deterministic payload (everything except the wall clock)."""
        return {
            "scenario": self.scenario,
            "total_energy_wt": self.total_energy_wt,
            "per_timeslot_watts": list(self.per_timeslot_watts),
            "layer_breakdown": self.layer_breakdown,
            "active_switches": list(self.active_switches),
            "violations": {str(t): list(v) for t, v in self.violations.items()},
        }

    def to_dict(self) -> dict:
        doc = {"version": REPORT_FORMAT_VERSION}
        doc.update(self.fingerprint())
        doc["runtime_ms"] = self.runtime_ms
        return doc


def save_report(report: EnergyReport, path) -> None:
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh)


def load_report(path) -> EnergyReport:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("version") != REPORT_FORMAT_VERSION:
        raise ConfigError(f"unsupported report version {doc.get('version')!r} in {path}")
    return EnergyReport(
        scenario=doc["scenario"],
        total_energy_wt=doc["total_energy_wt"],
        per_timeslot_watts=tuple(doc["per_timeslot_watts"]),
        layer_breakdown=doc["layer_breakdown"],
        active_switches=tuple(doc["active_switches"]),
        runtime_ms=doc["runtime_ms"],
        violations={int(t): tuple(v) for t, v in doc["violations"].items()},
    )


def _resolve_workload(scenario: Scenario, jobs=None):
    if jobs is not None:
        return list(jobs)
    if scenario.workload_path is not None:
        loaded, _ = load_workload(scenario.workload_path)
        return loaded
    if scenario.utilization is None:
        raise ConfigError(
            "scenario needs an inline utilization, a workload file or explicit jobs"
        )
    cfg = WorkloadConfig(
        k=scenario.k,
        target_utilization=scenario.utilization,
        horizon=scenario.horizon,
        server_capacity=scenario.server_capacity,
    )
    workload_seed = (
        scenario.workload_seed if scenario.workload_seed is not None else scenario.seed
    )
    return generate_workload(cfg, workload_seed)


def run_scenario(scenario: Scenario, jobs=None, on_plan=None) -> EnergyReport:
    """Assign VMs once, then route and meter every timeslot.

    Baseline routers may overload switches at extreme load; those
    timeslots are flagged in the report instead of aborting the run.
    The energy-efficient router controls its own active set, so a
    violation there is a real error and propagates.  `on_plan`, when
    given, receives every timeslot's RoutingPlan (route inspection).
    """
    started = time.perf_counter()
    tree = build_fat_tree(scenario.k, server_capacity=scenario.server_capacity)
    jobs = _resolve_workload(scenario, jobs)
    params = scenario.power

    placement = assign(
        scenario.assign_strategy, jobs, tree,
        seed=scenario.seed, horizon=scenario.horizon,
    )
    placement.validate(jobs, tree)
    occupied = sorted({tree.locate(s) for s in placement.placements.values()})

    per_slot_watts: list[float] = []
    active_counts: list[int] = []
    violations: dict[int, tuple[int, ...]] = {}
    layer_totals = {TOR: 0.0, AGG: 0.0, CORE: 0.0}
    for t in range(scenario.horizon):
        demand_set = demands_at(jobs, placement, t)
        flows = demand_set.flows
        if scenario.route_strategy == "sp":
            plan = sp_route(flows, tree, params=params, timeslot=t, strict=False)
        elif scenario.route_strategy == "ecmp":
            plan = ecmp_route(
                flows, tree, seed=[scenario.seed, t], params=params,
                timeslot=t, strict=False,
            )
        else:
            _, plan = eer(flows, tree, params, occupied_racks=occupied, timeslot=t)
        if plan.violations:
            violations[t] = plan.violations
        if on_plan is not None:
            on_plan(plan)
        watts = 0.0
        for sw, load in plan.loads.items():
            p = switch_power(load, params, check=False)
            watts += p
            layer_totals[tree.layer(sw)] += p
        per_slot_watts.append(watts)
        active_counts.append(sum(1 for load in plan.loads.values() if load > 0))

    runtime_ms = (time.perf_counter() - started) * 1000.0
    return EnergyReport(
        scenario=scenario.describe(),
        total_energy_wt=float(sum(per_slot_watts)),
        per_timeslot_watts=tuple(per_slot_watts),
        layer_breakdown={layer: float(v) for layer, v in layer_totals.items()},
        active_switches=tuple(active_counts),
        runtime_ms=runtime_ms,
        violations=violations,
    )


# --- comparisons -----------------------------------------------------------


def _workload_identity(scenario: dict):
    return (
        scenario.get("workload_path"),
        scenario.get("utilization"),
        scenario.get("workload_seed") if scenario.get("workload_seed") is not None
        else scenario.get("seed"),
    )


def compare(reports: Sequence[EnergyReport]) -> dict:
    """Normalize runs against the greedy-sp run on the same workload.

    Returns {"rows": per-run table rows, "summary": per-(strategy,
    utilization) mean/std of the ratios}.  A missing baseline for any
    workload is an error.
    """
    baselines = {}
    for report in reports:
        sc = report.scenario
        if sc["assign"] == "greedy" and sc["route"] == "sp":
            baselines[_workload_identity(sc)] = report.total_energy_wt

    rows = []
    grouped: dict[tuple, list[float]] = {}
    energies: dict[tuple, list[float]] = {}
    for report in reports:
        sc = report.scenario
        identity = _workload_identity(sc)
        if identity not in baselines:
            raise ConfigError(
                f"no greedy-sp baseline for workload {identity} "
                f"(scenario {sc['label']})"
            )
        base = baselines[identity]
        ratio = report.total_energy_wt / base if base > 0 else 1.0
        rows.append(
            {
                "scenario": sc["label"],
                "utilization": sc.get("utilization"),
                "seed": sc.get("workload_seed") or sc.get("seed"),
                "total_energy_wt": report.total_energy_wt,
                "ratio_to_baseline": ratio,
                "runtime_ms": report.runtime_ms,
                "violations": len(report.violations),
            }
        )
        key = (sc["label"], sc.get("utilization"))
        grouped.setdefault(key, []).append(ratio)
        energies.setdefault(key, []).append(report.total_energy_wt)

    summary = []
    for (label, util), ratios in sorted(grouped.items(), key=lambda kv: str(kv[0])):
        summary.append(
            {
                "scenario": label,
                "utilization": util,
                "repeats": len(ratios),
                "mean_energy_wt": float(np.mean(energies[(label, util)])),
                "mean_ratio": float(np.mean(ratios)),
                "std_ratio": float(np.std(ratios)),
            }
        )
    return {"rows": rows, "summary": summary}


def derived_seed(*parts: int) -> int:
    """Stable scalar seed derived from a tuple of integers."""
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def sweep(
    k: int,
    utilizations: Sequence[float],
    repeats: int,
    base_seed: int = 0,
    horizon: int = 100,
    server_capacity: int = 2,
    power: PowerParams = None,
    grid: Sequence[tuple[str, str]] = STRATEGY_GRID,
) -> tuple[list[EnergyReport], dict]:
    """Run the strategy grid over utilizations x repeats; one workload per cell.

    Every repeat draws a fresh workload seed; all strategies in the grid
    share that workload, so the comparison is paired per seed.
    """
    power = power or PowerParams()
    reports: list[EnergyReport] = []
    for u_index, utilization in enumerate(utilizations):
        for repeat in range(repeats):
            seed = derived_seed(base_seed, u_index, repeat)
            cfg = WorkloadConfig(
                k=k, target_utilization=utilization, horizon=horizon,
                server_capacity=server_capacity,
            )
            jobs = generate_workload(cfg, seed)
            for assign_name, route_name in grid:
                scenario = Scenario(
                    k=k,
                    assign_strategy=assign_name,
                    route_strategy=route_name,
                    seed=seed,
                    utilization=utilization,
                    workload_seed=seed,
                    horizon=horizon,
                    server_capacity=server_capacity,
                    power=power,
                )
                reports.append(run_scenario(scenario, jobs=jobs))
    return reports, compare(reports)


def write_table(rows: Sequence[dict], path) -> None:
    """Flat tabular export with the fixed column set, comma separated."""
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=TABLE_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({col: row.get(col) for col in TABLE_COLUMNS})
