"""Delimited-text report tables; a pure function of the record set."""
from __future__ import annotations

import csv
import io
import json
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

from ..records import RunRecord
from .metrics import DegenerateGap, completion_rate, gamma, success_rate

GROUP_FIELDS = ("site", "difficulty", "task_id")
GAMMA_AGENTS = {"reactive": "reactive", "tree": "tree_search", "planner": "mpc"}
WALL_CLOCK_NOTE = "harness time only; not comparable with API-bound latencies"


@dataclass(frozen=True)
class Report:
    tables: dict[str, str]
    summary: dict

    def write(self, out_dir: Union[str, Path]) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = []
        for name, text in self.tables.items():
            p = out / f"{name}.csv"
            p.write_text(text, encoding="utf-8")
            paths.append(p)
        p = out / "summary.json"
        p.write_text(json.dumps(self.summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        paths.append(p)
        return paths


def _csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _f(x: float, digits: int = 4) -> str:
    return f"{x:.{digits}f}"


def summarize(records: Sequence[RunRecord], group_by: Sequence[str] = ("site",)) -> Report:
    for g in group_by:
        if g not in GROUP_FIELDS:
            raise ValueError(f"group_by fields must come from {GROUP_FIELDS}")
    group_by = tuple(group_by)
    cells: dict[tuple, dict[str, list[RunRecord]]] = defaultdict(lambda: defaultdict(list))
    for r in records:
        cells[tuple(getattr(r, g) for g in group_by)][r.agent].append(r)

    rate_rows, step_rows, gamma_rows = [], [], []
    summary = {"group_by": list(group_by), "wall_clock_note": WALL_CLOCK_NOTE, "groups": []}
    for key in sorted(cells):
        by_agent = cells[key]
        entry = {"group": dict(zip(group_by, key)), "agents": {}}
        for agent in sorted(by_agent):
            recs = by_agent[agent]
            sr, cr = success_rate(recs), completion_rate(recs)
            steps = sum(r.steps for r in recs) / len(recs)
            real = sum(r.real_action_count for r in recs) / len(recs)
            wall = sum(r.wall_clock_seconds for r in recs) / len(recs)
            errors = sum(r.outcome == "error" for r in recs)
            rate_rows.append([*key, agent, len(recs), _f(sr), _f(cr), errors])
            step_rows.append([*key, agent, _f(steps, 2), _f(real, 2), _f(wall, 3)])
            entry["agents"][agent] = {
                "episodes": len(recs), "success_rate": round(sr, 6), "completion_rate": round(cr, 6),
                "mean_steps": round(steps, 6), "mean_real_actions": round(real, 6),
                "mean_wall_clock_seconds": round(wall, 6), "errors": errors,
            }
        g = ""
        if all(a in by_agent for a in GAMMA_AGENTS.values()):
            srs = {k: success_rate(by_agent[a]) for k, a in GAMMA_AGENTS.items()}
            try:
                g = f"{gamma(srs['reactive'], srs['tree'], srs['planner']):.1f}"
            except DegenerateGap:
                g = ""
            gamma_rows.append([*key, _f(srs["reactive"]), _f(srs["tree"]), _f(srs["planner"]), g])
        entry["gamma"] = float(g) if g else None
        summary["groups"].append(entry)

    tables = {
        "rates": _csv([*group_by, "agent", "episodes", "success_rate", "completion_rate", "errors"], rate_rows),
        "steps": _csv([*group_by, "agent", "mean_steps", "mean_real_actions", "mean_harness_seconds"], step_rows),
        "gamma": _csv([*group_by, "sr_reactive", "sr_tree_search", "sr_mpc", "gamma_pct"], gamma_rows),
    }
    return Report(tables, summary)
