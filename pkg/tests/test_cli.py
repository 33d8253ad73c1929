"""CLI subcommands, config files and exit codes."""

import csv
import json

from dcnsim.cli import main
from dcnsim.simengine import TABLE_COLUMNS, load_report
from dcnsim.workload import load_workload


def test_gen_run_compare_pipeline(tmp_path):
    wl = tmp_path / "wl.json"
    assert main(["gen", "--k", "4", "--utilization", "0.4", "--seed", "5",
                 "--horizon", "10", "--out", str(wl)]) == 0
    jobs, meta = load_workload(wl)
    assert jobs and meta["horizon"] == 10

    base = tmp_path / "base.json"
    assert main(["run", "--workload", str(wl), "--assign", "greedy",
                 "--route", "sp", "--k", "4", "--seed", "5", "--horizon", "10",
                 "--out", str(base)]) == 0
    report = load_report(base)
    assert report.scenario["label"] == "greedy-sp"

    other = tmp_path / "eer.json"
    assert main(["run", "--workload", str(wl), "--assign", "opt_eea",
                 "--route", "eer", "--k", "4", "--seed", "5", "--horizon", "10",
                 "--out", str(other)]) == 0

    table = tmp_path / "cmp.csv"
    assert main(["compare", "--reports", str(base), str(other),
                 "--baseline", str(base), "--out", str(table)]) == 0
    with open(table) as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == list(TABLE_COLUMNS)
    by_label = {r["scenario"]: r for r in rows}
    assert float(by_label["greedy-sp"]["ratio_to_baseline"]) == 1.0
    assert float(by_label["opt_eea-eer"]["ratio_to_baseline"]) <= 1.0


def test_run_can_dump_routes(tmp_path):
    wl = tmp_path / "wl.json"
    main(["gen", "--k", "4", "--utilization", "0.3", "--seed", "2",
          "--horizon", "6", "--out", str(wl)])
    out = tmp_path / "r.json"
    routes = tmp_path / "routes.csv"
    assert main(["run", "--workload", str(wl), "--assign", "greedy",
                 "--route", "sp", "--k", "4", "--seed", "2", "--horizon", "6",
                 "--out", str(out), "--dump-routes", str(routes)]) == 0
    with open(routes) as fh:
        rows = list(csv.DictReader(fh))
    assert rows, "expected at least one routed demand"
    assert set(rows[0]) == {"timeslot", "src", "dst", "rate_mbps", "path"}


def test_sweep_outputs(tmp_path):
    out = tmp_path / "sweepdir"
    assert main(["sweep", "--k", "4", "--utilizations", "0.3", "--repeats", "1",
                 "--seed", "3", "--horizon", "6", "--out", str(out)]) == 0
    files = sorted(p.name for p in out.iterdir())
    assert "sweep.csv" in files and "summary.json" in files
    assert sum(name.endswith(".json") for name in files) >= 6  # 5 reports + summary
    summary = json.loads((out / "summary.json").read_text())
    assert {row["scenario"] for row in summary} == {
        "greedy-sp", "opt_greedy-sp", "greedy-eer", "eea-eer", "opt_eea-eer"
    }


def test_config_file_supplies_and_flags_override(tmp_path):
    cfg = tmp_path / "sim.cfg"
    cfg.write_text("k = 4\nutilization = 0.3\nseed = 9\nhorizon = 6\n")
    wl = tmp_path / "wl.json"
    assert main(["gen", "--config", str(cfg), "--out", str(wl)]) == 0
    _, meta = load_workload(wl)
    assert meta["seed"] == 9

    wl2 = tmp_path / "wl2.json"
    assert main(["gen", "--config", str(cfg), "--seed", "11", "--out", str(wl2)]) == 0
    _, meta2 = load_workload(wl2)
    assert meta2["seed"] == 11


def test_config_error_exit_code(tmp_path):
    out = tmp_path / "x.json"
    assert main(["gen", "--k", "4", "--utilization", "1.5", "--out", str(out)]) == 2
    assert main(["gen", "--k", "5", "--utilization", "0.5", "--out", str(out)]) == 2
    assert main(["run", "--route", "sp", "--assign", "greedy", "--out", str(out)]) == 2


def test_infeasible_exit_code(tmp_path):
    wl = tmp_path / "big.json"
    assert main(["gen", "--k", "8", "--utilization", "0.9", "--seed", "1",
                 "--horizon", "6", "--out", str(wl)]) == 0
    out = tmp_path / "r.json"
    # a k=8 workload cannot fit the 32 slots of a k=4 tree
    assert main(["run", "--workload", str(wl), "--assign", "greedy",
                 "--route", "sp", "--k", "4", "--seed", "1", "--horizon", "6",
                 "--out", str(out)]) == 3
