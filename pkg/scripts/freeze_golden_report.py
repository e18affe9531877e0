"""Regenerate the frozen record set and report used by the golden-file test.

Wall-clock fields are zeroed so the output depends only on the seeded run.
"""
from dataclasses import replace
from pathlib import Path

from dreamplan.bench import RunSpec, load_sites, make_gateway, run_grid, site_tasks, summarize
from dreamplan.records import write_records

GOLDEN = Path(__file__).resolve().parent.parent / "tests" / "golden" / "report"
SITES = ("shop-small", "trap-site")
AGENTS = ("reactive", "tree_search", "mpc")


def frozen_records():
    graphs = load_sites(SITES)
    gateway = make_gateway(graphs.values())
    specs = [RunSpec(agent=a) for a in AGENTS]
    return [replace(r, wall_clock_seconds=0.0) for r in run_grid(graphs, specs, site_tasks(graphs), gateway)]


def main():
    GOLDEN.mkdir(parents=True, exist_ok=True)
    records = frozen_records()
    write_records(GOLDEN / "records.jsonl", records)
    summarize(records, ["site"]).write(GOLDEN)
    print(f"{len(records)} records -> {GOLDEN}")


if __name__ == "__main__":
    main()
