"""Per-episode audit records and their line-delimited JSON form."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Union

from .core import Action, parse_action_line

OUTCOMES = ("stop_issued", "max_steps", "repeated_action", "budget_exhausted", "error")


@dataclass
class RunRecord:
    """One episode.

    ``decisions`` holds the planner's step decisions: live objects right after a
    run, plain dicts once read back from disk.
    """

    task_id: str
    agent: str
    actions: list[Action]
    decisions: list = field(default_factory=list)
    reward: int = 0
    milestones_satisfied: float = 0.0
    real_action_count: int = 0
    simulated_trajectory_count: int = 0
    irreversible_count: int = 0
    wall_clock_seconds: float = 0.0
    seed: int = 0
    config_digest: str = ""
    outcome: str = "stop_issued"
    site: str = ""
    difficulty: str = ""
    error: str = ""

    def __post_init__(self):
        if self.reward not in (0, 1):
            raise ValueError("reward must be 0 or 1")
        if not 0.0 <= self.milestones_satisfied <= 1.0:
            raise ValueError("milestones_satisfied must lie in [0, 1]")
        if self.outcome not in OUTCOMES:
            raise ValueError(f"outcome must be one of {OUTCOMES}")

    @property
    def steps(self) -> int:
        return len(self.actions)

    def to_json(self) -> dict:
        return {
            "task_id": self.task_id,
            "agent": self.agent,
            "site": self.site,
            "difficulty": self.difficulty,
            "actions": [a.render() for a in self.actions],
            "decisions": [d if isinstance(d, dict) else d.to_json() for d in self.decisions],
            "reward": self.reward,
            "milestones_satisfied": self.milestones_satisfied,
            "real_action_count": self.real_action_count,
            "simulated_trajectory_count": self.simulated_trajectory_count,
            "irreversible_count": self.irreversible_count,
            "wall_clock_seconds": self.wall_clock_seconds,
            "seed": self.seed,
            "config_digest": self.config_digest,
            "outcome": self.outcome,
            "error": self.error,
        }

    @classmethod
    def from_json(cls, d: dict) -> "RunRecord":
        d = dict(d)
        d["actions"] = [parse_action_line(a) for a in d["actions"]]
        return cls(**d)


def write_records(path: Union[str, Path], records: Iterable[RunRecord]) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r.to_json(), sort_keys=True) + "\n")


def read_records(path: Union[str, Path]) -> list[RunRecord]:
    out = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(RunRecord.from_json(json.loads(line)))
    return out
