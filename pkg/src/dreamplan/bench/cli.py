"""Command-line entry point: ``dreamplan run | report | sweep | ablate``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, replace
from pathlib import Path
from typing import Optional, Sequence

from ..llm import LLMConfig
from ..plan import AGENTS, PlannerConfig, TreeConfig
from ..records import RunRecord, read_records, write_records
from ..wm import REPRESENTATIONS, SimConfig
from .report import GROUP_FIELDS, summarize
from .runner import BACKENDS, MODEL_KINDS, RunSpec, load_sites, make_gateway, run_grid, site_tasks


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--site", nargs="+", default=None, help="fixture site names (default: all)")
    p.add_argument("--tasks", default=None, help="comma-separated task ids (default: all)")
    p.add_argument("--wm", choices=MODEL_KINDS, default="oracle")
    p.add_argument("--judge", choices=MODEL_KINDS, default="oracle")
    p.add_argument("--horizon", type=int, default=1)
    p.add_argument("--fidelity", type=float, default=1.0)
    p.add_argument("--representation", choices=REPRESENTATIONS, default="change_description")
    p.add_argument("--seed", type=int, nargs="+", default=[0])
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--samples", type=int, default=10, help="proposal samples per step (m)")
    p.add_argument("--judge-samples", type=int, default=3)
    p.add_argument("--max-steps", type=int, default=None)
    p.add_argument("--repeat-limit", type=int, default=3)
    p.add_argument("--cumulative-repeats", action="store_true")
    p.add_argument("--branching", type=int, default=3)
    p.add_argument("--max-depth", type=int, default=4)
    p.add_argument("--expansion-budget", type=int, default=20)
    p.add_argument("--mode", choices=("live", "record", "replay"), default="live")
    p.add_argument("--backend", choices=BACKENDS, default="scripted")
    p.add_argument("--model", default=LLMConfig.model_name, help="model name sent to the http backend")
    p.add_argument("--transcript", type=Path, default=None, help="JSONL completion transcript")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--group-by", default="site")
    p.add_argument("--out", type=Path, required=True)


def _planner(args) -> PlannerConfig:
    return PlannerConfig(
        sim=SimConfig(args.horizon, args.representation, args.fidelity, args.seed[0]),
        judge_samples=args.judge_samples, k=args.k, m=max(args.samples, args.k),
        max_steps=args.max_steps, repeat_limit=args.repeat_limit,
        cumulative_repeats=args.cumulative_repeats,
        tree=TreeConfig(args.branching, args.max_depth, args.expansion_budget),
    )


def _execute(args, specs: Sequence[RunSpec], out: Path, extra: Optional[dict] = None) -> int:
    graphs = load_sites(args.site)
    tasks = site_tasks(graphs, args.tasks.split(",") if args.tasks else None)
    if not tasks:
        print("no tasks selected", file=sys.stderr)
        return 2
    transcript = args.transcript
    if transcript is None and args.mode != "live":
        transcript = out / "transcript.jsonl"
    gateway = make_gateway(graphs.values(), args.backend, args.mode, transcript)
    seeded = [s.with_seed(seed) for s in specs for seed in args.seed]
    out.mkdir(parents=True, exist_ok=True)
    config = {
        "argv": sys.argv[1:],
        "sites": sorted(graphs),
        "tasks": [f"{n}/{t.id}" for n, t in tasks],
        "runs": [{"agent": s.agent, "wm": s.wm, "judge": s.judge, "planner": asdict(s.planner),
                  "digest": s.planner.digest()} for s in seeded],
        **(extra or {}),
    }
    (out / "config.json").write_text(json.dumps(config, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    records = run_grid(graphs, seeded, tasks, gateway, workers=args.workers)
    write_records(out / "records.jsonl", records)
    summarize(records, args.group_by.split(",")).write(out / "report")
    failed = [r for r in records if r.outcome == "error"]
    for r in failed:
        print(f"episode {r.agent}/{r.task_id} failed: {r.error}", file=sys.stderr)
    print(f"{len(records)} episodes, {sum(r.reward for r in records)} rewarded, {len(failed)} errors -> {out}")
    return 1 if failed else 0


def _spec(args, agent: str, cfg: PlannerConfig) -> RunSpec:
    return RunSpec(agent, args.wm, args.judge, cfg, LLMConfig(model_name=args.model))


def cmd_run(args) -> int:
    cfg = _planner(args)
    return _execute(args, [_spec(args, a, cfg) for a in args.agent], args.out)


def cmd_sweep(args) -> int:
    base = _planner(args)
    code = 0
    for value in args.values:
        sim = replace(base.sim, **{args.param: int(value) if args.param == "horizon" else float(value)})
        spec = _spec(args, args.agent, replace(base, sim=sim))
        code |= _execute(args, [spec], args.out / f"{args.param}={value}", {"sweep": {args.param: value}})
    return code


def cmd_ablate(args) -> int:
    cfg = _planner(args)
    agents = ["mpc", args.variant, "reactive"]
    return _execute(args, [_spec(args, a, cfg) for a in agents], args.out,
                    {"ablation": args.variant})


def cmd_report(args) -> int:
    src = args.inp / "records.jsonl" if args.inp.is_dir() else args.inp
    records: list[RunRecord] = read_records(src)
    out = args.out or src.parent / "report"
    summarize(records, args.group_by.split(",")).write(out)
    print(f"report for {len(records)} records -> {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dreamplan", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run agents over fixture tasks")
    run.add_argument("--agent", nargs="+", choices=AGENTS, default=["mpc"])
    _common(run)
    run.set_defaults(func=cmd_run)

    rep = sub.add_parser("report", help="rebuild report tables from a records file")
    rep.add_argument("--in", dest="inp", type=Path, required=True)
    rep.add_argument("--group-by", default="site", help=f"comma-separated subset of {GROUP_FIELDS}")
    rep.add_argument("--out", type=Path, default=None)
    rep.set_defaults(func=cmd_report)

    sw = sub.add_parser("sweep", help="vary horizon or fidelity for one agent")
    sw.add_argument("--param", choices=("horizon", "fidelity"), required=True)
    sw.add_argument("--values", nargs="+", required=True)
    sw.add_argument("--agent", choices=AGENTS, default="mpc")
    _common(sw)
    sw.set_defaults(func=cmd_sweep)

    ab = sub.add_parser("ablate", help="compare the planner with an ablated variant and the reactive agent")
    ab.add_argument("--variant", choices=("rerank_only", "no_refine"), required=True)
    _common(ab)
    ab.set_defaults(func=cmd_ablate)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
