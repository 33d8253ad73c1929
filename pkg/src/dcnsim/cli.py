"""Command line interface: gen / run / compare / sweep.

A plain key=value config file can pre-fill any option; explicit flags
win.  Exit codes: 0 success, 2 configuration error, 3 infeasible
placement or routing.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

from .errors import CapacityError, ConfigError, InfeasibleError, SimulationError
from .power import PowerParams
from .simengine import (
    Scenario,
    compare,
    load_report,
    run_scenario,
    save_report,
    sweep,
    write_table,
)
from .workload import WorkloadConfig, generate_workload, save_workload

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3


def parse_config_file(path) -> dict:
    """Read `key = value` lines; '#' starts a comment."""
    values = {}
    try:
        with open(path) as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key = value")
                key, _, value = line.partition("=")
                values[key.strip().replace("-", "_")] = value.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return values


def _option(args, cfg, name, cast, default=None):
    """Flag > config file > default."""
    flag = getattr(args, name, None)
    if flag is not None:
        return flag
    if name in cfg:
        try:
            return cast(cfg[name])
        except ValueError as exc:
            raise ConfigError(f"config value {name}={cfg[name]!r}: {exc}") from exc
    return default


def _power_from(args, cfg) -> PowerParams:
    return PowerParams(
        sigma=_option(args, cfg, "sigma", float, 200.0),
        mu=_option(args, cfg, "mu", float, 1e-4),
        alpha=_option(args, cfg, "alpha", float, 2.0),
        capacity=_option(args, cfg, "capacity_gbps", float, 1000.0),
    )


def cmd_gen(args) -> int:
    cfg = parse_config_file(args.config) if args.config else {}
    k = _option(args, cfg, "k", int)
    utilization = _option(args, cfg, "utilization", float)
    seed = _option(args, cfg, "seed", int, 0)
    horizon = _option(args, cfg, "horizon", int, 100)
    server_capacity = _option(args, cfg, "server_capacity", int, 2)
    if k is None or utilization is None:
        raise ConfigError("gen needs --k and --utilization")
    wl_cfg = WorkloadConfig(
        k=k, target_utilization=utilization, horizon=horizon,
        server_capacity=server_capacity,
    )
    jobs = generate_workload(wl_cfg, seed)
    save_workload(
        args.out, jobs, horizon=horizon, seed=seed,
        config={
            "k": k, "utilization": utilization,
            "server_capacity": server_capacity,
        },
    )
    print(f"wrote {len(jobs)} jobs ({sum(j.slots for j in jobs)} slots) to {args.out}")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = parse_config_file(args.config) if args.config else {}
    k = _option(args, cfg, "k", int)
    if k is None:
        raise ConfigError("run needs --k")
    workload_path = _option(args, cfg, "workload", str)
    utilization = _option(args, cfg, "utilization", float)
    workload_seed = None
    if workload_path:
        # Label the report with the file's provenance so comparison
        # tables carry the utilization and generating seed.
        try:
            with open(workload_path) as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read workload {workload_path}: {exc}") from exc
        workload_seed = doc.get("seed")
        if utilization is None:
            utilization = (doc.get("config") or {}).get("utilization")
    scenario = Scenario(
        k=k,
        assign_strategy=_option(args, cfg, "assign", str, "greedy"),
        route_strategy=_option(args, cfg, "route", str, "sp"),
        seed=_option(args, cfg, "seed", int, 0),
        utilization=utilization,
        workload_seed=workload_seed,
        workload_path=workload_path,
        horizon=_option(args, cfg, "horizon", int, 100),
        server_capacity=_option(args, cfg, "server_capacity", int, 2),
        timeslot_seconds=_option(args, cfg, "timeslot_seconds", float, 60.0),
        power=_power_from(args, cfg),
    )
    route_writer = None
    route_fh = None
    if args.dump_routes:
        route_fh = open(args.dump_routes, "w", newline="")
        writer = csv.writer(route_fh)
        writer.writerow(["timeslot", "src", "dst", "rate_mbps", "path"])

        def route_writer(plan):
            for t, src, dst, rate, path in plan.rows():
                writer.writerow([t, src, dst, rate, " ".join(map(str, path))])

    try:
        report = run_scenario(scenario, on_plan=route_writer)
    finally:
        if route_fh:
            route_fh.close()
    save_report(report, args.out)
    print(
        f"{scenario.label}: {report.total_energy_wt:.1f} watt-timeslots "
        f"({report.total_energy_joules:.0f} J), "
        f"{len(report.violations)} violating timeslots, "
        f"{report.runtime_ms:.0f} ms -> {args.out}"
    )
    return EXIT_OK


def cmd_compare(args) -> int:
    baseline = load_report(args.baseline)
    reports = [baseline] + [
        load_report(p) for p in args.reports if os.path.abspath(p) != os.path.abspath(args.baseline)
    ]
    base = baseline.total_energy_wt
    if base <= 0:
        raise ConfigError("baseline report has zero energy; ratios are undefined")
    rows = []
    for report in reports:
        sc = report.scenario
        rows.append(
            {
                "scenario": sc["label"],
                "utilization": sc.get("utilization"),
                "seed": sc.get("workload_seed") or sc.get("seed"),
                "total_energy_wt": report.total_energy_wt,
                "ratio_to_baseline": report.total_energy_wt / base,
                "runtime_ms": report.runtime_ms,
                "violations": len(report.violations),
            }
        )
    write_table(rows, args.out)
    for row in rows:
        print(
            f"{row['scenario']:>16}  {row['total_energy_wt']:12.1f} wt  "
            f"ratio {row['ratio_to_baseline']:.3f}"
        )
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = parse_config_file(args.config) if args.config else {}
    k = _option(args, cfg, "k", int)
    if k is None:
        raise ConfigError("sweep needs --k")
    levels = _option(args, cfg, "utilizations", str, args.utilizations)
    utilizations = [float(u) for u in levels.split(",") if u.strip()]
    if not utilizations:
        raise ConfigError("sweep needs a non-empty --utilizations list")
    os.makedirs(args.out, exist_ok=True)
    reports, tables = sweep(
        k=k,
        utilizations=utilizations,
        repeats=_option(args, cfg, "repeats", int, args.repeats),
        base_seed=_option(args, cfg, "seed", int, 0),
        horizon=_option(args, cfg, "horizon", int, 100),
        server_capacity=_option(args, cfg, "server_capacity", int, 2),
        power=_power_from(args, cfg),
    )
    for index, report in enumerate(reports):
        sc = report.scenario
        name = f"{sc['label']}_u{sc['utilization']:.2f}_s{sc['workload_seed']}.json"
        save_report(report, os.path.join(args.out, name))
    write_table(tables["rows"], os.path.join(args.out, "sweep.csv"))
    with open(os.path.join(args.out, "summary.json"), "w") as fh:
        json.dump(tables["summary"], fh, indent=2)
    for entry in tables["summary"]:
        print(
            f"{entry['scenario']:>16} @ {entry['utilization']:.2f}: "
            f"ratio {entry['mean_ratio']:.3f} +- {entry['std_ratio']:.3f} "
            f"({entry['repeats']} runs)"
        )
    print(f"wrote {len(reports)} reports to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dcnsim",
        description="Fat-Tree data center network energy simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic workload file")
    gen.add_argument("--k", type=int)
    gen.add_argument("--utilization", type=float)
    gen.add_argument("--seed", type=int)
    gen.add_argument("--horizon", type=int)
    gen.add_argument("--server-capacity", dest="server_capacity", type=int)
    gen.add_argument("--config")
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=cmd_gen)

    run = sub.add_parser("run", help="run one scenario and write its report")
    run.add_argument("--workload", help="workload file (else --utilization generates)")
    run.add_argument("--assign", choices=["greedy", "opt_greedy", "eea", "opt_eea"])
    run.add_argument("--route", choices=["sp", "ecmp", "eer"])
    run.add_argument("--k", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--utilization", type=float)
    run.add_argument("--horizon", type=int)
    run.add_argument("--server-capacity", dest="server_capacity", type=int)
    run.add_argument("--timeslot-seconds", dest="timeslot_seconds", type=float)
    run.add_argument("--sigma", type=float)
    run.add_argument("--mu", type=float)
    run.add_argument("--alpha", type=float)
    run.add_argument("--capacity-gbps", dest="capacity_gbps", type=float)
    run.add_argument("--dump-routes", help="also write per-timeslot routes as CSV")
    run.add_argument("--config")
    run.add_argument("--out", required=True)
    run.set_defaults(func=cmd_run)

    cmp_ = sub.add_parser("compare", help="tabulate reports against a baseline")
    cmp_.add_argument("--reports", nargs="+", required=True)
    cmp_.add_argument("--baseline", required=True)
    cmp_.add_argument("--out", required=True)
    cmp_.set_defaults(func=cmd_compare)

    sw = sub.add_parser("sweep", help="strategy grid over utilization levels")
    sw.add_argument("--k", type=int)
    sw.add_argument(
        "--utilizations",
        default=",".join(f"{u / 100:.2f}" for u in range(5, 96, 10)),
        help="comma separated; default 0.05..0.95 step 0.10",
    )
    sw.add_argument("--repeats", type=int, default=5)
    sw.add_argument("--seed", type=int)
    sw.add_argument("--horizon", type=int)
    sw.add_argument("--server-capacity", dest="server_capacity", type=int)
    sw.add_argument("--sigma", type=float)
    sw.add_argument("--mu", type=float)
    sw.add_argument("--alpha", type=float)
    sw.add_argument("--capacity-gbps", dest="capacity_gbps", type=float)
    sw.add_argument("--config")
    sw.add_argument("--out", required=True)
    sw.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InfeasibleError, CapacityError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
