"""Wires agents, models and fixture environments into runnable experiment grids."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

from ..core import TaskInstance
from ..env.graph import SiteGraph, fixture_names, load_fixture
from ..env.simulator import WebEnv, oracle_distance, initial_state
from ..judge import LLMJudge, OracleJudge
from ..llm.gateway import Gateway, HTTPTransport, TranscriptCache
from ..llm.prompts import LLMConfig
from ..llm.scripted import ScriptedSiteModel
from ..plan import AGENTS, Components, PlannerConfig, run_episode
from ..propose import ProposeConfig, Proposer
from ..records import RunRecord
from ..wm import LLMWorldModel, OracleWorldModel

BACKENDS = ("scripted", "http")
MODEL_KINDS = ("oracle", "llm")


@dataclass(frozen=True)
class RunSpec:
    agent: str = "mpc"
    wm: str = "oracle"
    judge: str = "oracle"
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    llm: LLMConfig = field(default_factory=LLMConfig)

    def __post_init__(self):
        if self.agent not in AGENTS:
            raise ValueError(f"agent must be one of {AGENTS}")
        if self.wm not in MODEL_KINDS or self.judge not in MODEL_KINDS:
            raise ValueError(f"wm and judge must be one of {MODEL_KINDS}")

    def with_seed(self, seed: int) -> "RunSpec":
        return replace(self, planner=replace(self.planner, sim=replace(self.planner.sim, seed=seed)))


def load_sites(names: Optional[Sequence[str]] = None) -> dict[str, SiteGraph]:
    return {n: load_fixture(n) for n in (names or fixture_names())}


def site_tasks(graphs: dict[str, SiteGraph], task_ids: Optional[Sequence[str]] = None) -> list[tuple[str, TaskInstance]]:
    out = []
    for name, g in graphs.items():
        for tid, task in g.tasks.items():
            if task_ids is None or tid in task_ids:
                out.append((name, task))
    return out


def solvable(graph: SiteGraph, task: TaskInstance, max_steps: Optional[int] = None) -> bool:
    """A goal state is reachable with a step left for the stop action."""
    limit = max_steps or task.max_steps
    d = oracle_distance(graph, initial_state(graph, task.start_page), graph.goals[task.id])
    return d + 1 <= limit


def make_gateway(graphs: Iterable[SiteGraph], backend: str = "scripted", mode: str = "live",
                 transcript: Optional[Path] = None, max_in_flight: int = 8) -> Gateway:
    if backend not in BACKENDS:
        raise ValueError(f"backend must be one of {BACKENDS}")
    cache = TranscriptCache(transcript) if (transcript is not None or mode == "replay") else None
    transport = None
    if mode != "replay":
        transport = ScriptedSiteModel(graphs) if backend == "scripted" else HTTPTransport()
    return Gateway(transport, mode=mode, cache=cache, max_in_flight=max_in_flight)


def build_components(env: WebEnv, gateway: Gateway, spec: RunSpec) -> Components:
    cfg = spec.planner
    proposer = Proposer(gateway, spec.llm, ProposeConfig(cfg.k, cfg.m))
    wm = OracleWorldModel(env, cfg.sim) if spec.wm == "oracle" else LLMWorldModel(gateway, spec.llm, cfg.sim)
    judge = OracleJudge(env) if spec.judge == "oracle" else LLMJudge(gateway, spec.llm, cfg.judge_samples)
    return Components(proposer, wm, judge)


def run_task(graph: SiteGraph, task: TaskInstance, spec: RunSpec, gateway: Gateway) -> RunRecord:
    env = WebEnv(graph)
    return run_episode(spec.agent, env, task, spec.planner, build_components(env, gateway, spec))


def run_grid(graphs: dict[str, SiteGraph], specs: Sequence[RunSpec], tasks: Sequence[tuple[str, TaskInstance]],
             gateway: Gateway, workers: int = 1) -> list[RunRecord]:
    """Runs every (spec, task) pair; each episode gets its own environment. Output order is input order."""
    jobs = [(spec, name, task) for spec in specs for name, task in tasks]

    def one(job):
        spec, name, task = job
        return run_task(graphs[name], task, spec, gateway)

    if workers <= 1:
        return [one(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, jobs))
