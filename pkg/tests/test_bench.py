import csv
import io
import json
from dataclasses import replace
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dreamplan.bench import (
    DegenerateGap,
    EmptyInput,
    RunSpec,
    completion_rate,
    gamma,
    load_sites,
    make_gateway,
    run_grid,
    site_tasks,
    success_rate,
    summarize,
)
from dreamplan.bench.cli import main
from dreamplan.core import Action
from dreamplan.records import RunRecord, read_records, write_records
from oracles import gap_closed, round_half_up_tenth

GOLDEN = Path(__file__).parent / "golden" / "report"

# (reactive, tree search, planner, expected gap closed) per breakdown row
GAP_ROWS = {
    "shopping": (19.4, 29.0, 26.5, 74.0),
    "reddit": (15.3, 20.5, 18.6, 63.5),
    "classifieds": (16.8, 26.5, 22.6, 59.8),
    "easy": (28.8, 42.3, 37.4, 63.7),
    "medium": (16.4, 22.2, 24.1, 132.8),
    "hard": (10.7, 14.9, 12.7, 47.6),
}


def rec(agent="mpc", reward=0, site="s", milestones=None, **kw):
    return RunRecord(task_id=kw.pop("task_id", "t"), agent=agent, actions=[Action.click(1)], reward=reward,
                     milestones_satisfied=float(reward) if milestones is None else milestones, site=site, **kw)


# -- metrics ----------------------------------------------------------------

def test_success_rate():
    assert success_rate([rec(reward=r) for r in (1, 0, 1, 0)]) == 0.5
    assert success_rate([rec(reward=1)] * 3) == 1.0
    with pytest.raises(EmptyInput):
        success_rate([])


def test_completion_rate():
    assert completion_rate([rec(milestones=1.0), rec(milestones=0.5)]) == 0.75
    with pytest.raises(EmptyInput):
        completion_rate([])


@pytest.mark.parametrize("row", sorted(GAP_ROWS))
def test_gap_closed_reference_rows(row):
    lo, hi, mid, want = GAP_ROWS[row]
    expected = round_half_up_tenth(gap_closed(Fraction(str(lo)), Fraction(str(hi)), Fraction(str(mid))))
    assert gamma(lo, hi, mid) == float(expected)
    assert abs(gamma(lo, hi, mid) - want) <= 0.1


def test_gap_closed_edges():
    assert gamma(0.2, 0.6, 0.6) == 100.0
    assert gamma(0.2, 0.6, 0.2) == 0.0
    with pytest.raises(DegenerateGap):
        gamma(0.3, 0.3, 0.5)


@given(st.integers(0, 100), st.integers(0, 100), st.integers(0, 100))
def test_gap_closed_matches_exact_oracle(a, b, c):
    if a == b:
        with pytest.raises(DegenerateGap):
            gamma(a / 100, b / 100, c / 100)
        return
    exact = gap_closed(Fraction(a, 100), Fraction(b, 100), Fraction(c, 100))
    assert gamma(a / 100, b / 100, c / 100) == float(round_half_up_tenth(exact))


# -- records ------------------------------------------------------------------

def test_record_json_round_trip(tmp_path):
    r = rec(reward=1, seed=4, outcome="max_steps", difficulty="easy")
    r.actions = [Action.click(2), Action.type_text(5, "red dress"), Action.stop("$19.99")]
    write_records(tmp_path / "r.jsonl", [r, r])
    back = read_records(tmp_path / "r.jsonl")
    assert back == [r, r]


def test_record_validation():
    with pytest.raises(ValueError):
        rec(reward=2)
    with pytest.raises(ValueError):
        rec(outcome="crashed")
    with pytest.raises(ValueError):
        rec(milestones=1.5)


# -- reports ---------------------------------------------------------------

def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_step_table_shape():
    records = [rec(agent=a, site=s) for a in ("reactive", "tree_search", "mpc") for s in ("a", "b")]
    steps = rows(summarize(records).tables["steps"])
    assert len(steps) == 6
    assert [(r["site"], r["agent"]) for r in steps] == [
        ("a", "mpc"), ("a", "reactive"), ("a", "tree_search"), ("b", "mpc"), ("b", "reactive"), ("b", "tree_search")]


def test_gap_column_needs_all_three_agents():
    full = [rec("reactive", 0, "a"), rec("tree_search", 1, "a"), rec("mpc", 1, "a"),
            rec("reactive", 0, "b"), rec("mpc", 1, "b")]
    report = summarize(full)
    g = rows(report.tables["gamma"])
    assert [r["site"] for r in g] == ["a"] and g[0]["gamma_pct"] == "100.0"
    groups = {e["group"]["site"]: e["gamma"] for e in report.summary["groups"]}
    assert groups == {"a": 100.0, "b": None}


def test_degenerate_gap_leaves_cell_blank():
    same = [rec("reactive", 1), rec("tree_search", 1), rec("mpc", 1)]
    assert rows(summarize(same).tables["gamma"])[0]["gamma_pct"] == ""


def test_group_by_validation():
    with pytest.raises(ValueError):
        summarize([rec()], ["agent"])


@given(st.permutations(list(range(6))))
def test_report_ignores_record_order(order):
    records = [rec(a, r, s, task_id=f"t{i}") for i, (a, r, s) in enumerate(
        [("mpc", 1, "x"), ("mpc", 0, "y"), ("reactive", 0, "x"), ("reactive", 1, "y"),
         ("tree_search", 1, "x"), ("tree_search", 1, "y")])]
    assert summarize([records[i] for i in order]).tables == summarize(records).tables


def test_golden_report(tmp_path):
    records = read_records(GOLDEN / "records.jsonl")
    summarize(records, ["site"]).write(tmp_path)
    for name in ("rates.csv", "steps.csv", "gamma.csv", "summary.json"):
        assert (tmp_path / name).read_bytes() == (GOLDEN / name).read_bytes(), name


def test_frozen_records_are_reproducible():
    graphs = load_sites(["shop-small", "trap-site"])
    specs = [RunSpec(agent=a) for a in ("reactive", "tree_search", "mpc")]
    fresh = [replace(r, wall_clock_seconds=0.0).to_json()
             for r in run_grid(graphs, specs, site_tasks(graphs), make_gateway(graphs.values()))]
    stored = [json.loads(line) for line in (GOLDEN / "records.jsonl").read_text().splitlines()]
    assert fresh == stored


# -- command line ------------------------------------------------------------

def test_cli_run_writes_artifacts(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["run", "--agent", "mpc", "reactive", "--site", "trap-site", "--out", str(out)])
    assert code == 0
    assert {p.name for p in out.iterdir()} >= {"config.json", "records.jsonl", "report"}
    records = read_records(out / "records.jsonl")
    assert len(records) == 10
    cfg = json.loads((out / "config.json").read_text())
    assert {r["digest"] for r in cfg["runs"]} == {r.config_digest for r in records}
    assert "10 episodes" in capsys.readouterr().out


def test_cli_report_reproduces_tables(tmp_path):
    out = tmp_path / "run"
    main(["run", "--agent", "reactive", "tree_search", "mpc", "--site", "shop-small", "--out", str(out)])
    assert main(["report", "--in", str(out), "--out", str(tmp_path / "again")]) == 0
    for name in ("rates.csv", "steps.csv", "gamma.csv"):
        assert (out / "report" / name).read_text() == (tmp_path / "again" / name).read_text()


def test_cli_record_then_replay(tmp_path):
    rec_dir, rep_dir = tmp_path / "rec", tmp_path / "rep"
    base = ["run", "--agent", "mpc", "--site", "shop-small", "--judge", "llm", "--wm", "llm"]
    assert main(base + ["--mode", "record", "--out", str(rec_dir)]) == 0
    assert (rec_dir / "transcript.jsonl").exists()
    code = main(base + ["--mode", "replay", "--transcript", str(rec_dir / "transcript.jsonl"), "--out", str(rep_dir)])
    assert code == 0
    a = [replace(r, wall_clock_seconds=0) for r in read_records(rec_dir / "records.jsonl")]
    b = [replace(r, wall_clock_seconds=0) for r in read_records(rep_dir / "records.jsonl")]
    assert a == b


def test_cli_sweep_and_ablate(tmp_path):
    assert main(["sweep", "--param", "fidelity", "--values", "1.0", "0.5", "--site", "shop-small",
                 "--out", str(tmp_path / "sw")]) == 0
    assert sorted(p.name for p in (tmp_path / "sw").iterdir()) == ["fidelity=0.5", "fidelity=1.0"]
    assert main(["ablate", "--variant", "no_refine", "--site", "trap-site", "--out", str(tmp_path / "ab")]) == 0
    agents = {r.agent for r in read_records(tmp_path / "ab" / "records.jsonl")}
    assert agents == {"mpc", "no_refine", "reactive"}


def test_cli_exit_code_on_errors(tmp_path):
    # replaying an empty transcript makes every episode fail on the first completion
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    code = main(["run", "--site", "shop-small", "--tasks", "browse-computers", "--mode", "replay",
                 "--transcript", str(empty), "--out", str(tmp_path / "x")])
    assert code == 1
    assert read_records(tmp_path / "x" / "records.jsonl")[0].outcome == "error"


def test_cli_multiple_seeds(tmp_path):
    main(["run", "--site", "trap-site", "--tasks", "book-paris-flight", "--seed", "0", "1", "2",
          "--fidelity", "0.5", "--out", str(tmp_path)])
    assert sorted(r.seed for r in read_records(tmp_path / "records.jsonl")) == [0, 1, 2]
