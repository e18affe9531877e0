"""Every agent on every fixture task, reported per site plus the gap-closed column."""
import argparse
from pathlib import Path

from dreamplan.bench import RunSpec, load_sites, make_gateway, run_grid, site_tasks, summarize
from dreamplan.plan import AGENTS
from dreamplan.records import write_records


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("runs/ablations"))
    ap.add_argument("--group-by", default="site")
    ap.add_argument("--workers", type=int, default=4)
    args = ap.parse_args()

    graphs = load_sites()
    records = run_grid(graphs, [RunSpec(agent=a) for a in AGENTS], site_tasks(graphs),
                       make_gateway(graphs.values()), workers=args.workers)
    args.out.mkdir(parents=True, exist_ok=True)
    write_records(args.out / "records.jsonl", records)
    report = summarize(records, args.group_by.split(","))
    report.write(args.out / "report")
    for name in ("rates", "steps", "gamma"):
        print(f"# {name}\n{report.tables[name]}")


if __name__ == "__main__":
    main()
