from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from typing import Optional

from ..wm import SimConfig


@dataclass(frozen=True)
class TreeConfig:
    branching: int = 3
    max_depth: int = 4
    expansion_budget: int = 20

    def __post_init__(self):
        if self.branching < 1 or self.max_depth < 1:
            raise ValueError("branching and max_depth must be positive")
        if self.expansion_budget < 0:
            raise ValueError("expansion_budget must be >= 0")


@dataclass(frozen=True)
class PlannerConfig:
    sim: SimConfig = field(default_factory=SimConfig)
    judge_samples: int = 3
    k: int = 5
    m: int = 10
    max_steps: Optional[int] = None  # None: use the task's own limit
    repeat_limit: int = 3
    cumulative_repeats: bool = False
    refine: bool = True
    tree: TreeConfig = field(default_factory=TreeConfig)
    max_workers: int = 1

    def __post_init__(self):
        if self.judge_samples < 1 or self.k < 1:
            raise ValueError("judge_samples and k must be positive")
        if self.m < self.k:
            raise ValueError("m must be >= k")
        if self.repeat_limit < 1:
            raise ValueError("repeat_limit must be >= 1")
        if self.max_steps is not None and self.max_steps < 1:
            raise ValueError("max_steps must be positive")
        if self.max_workers < 1:
            raise ValueError("max_workers must be positive")

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:12]
