from __future__ import annotations

import logging
import time
from dataclasses import dataclass, replace
from typing import Optional

from ..core import Action, TaskInstance
from ..env.simulator import WebEnv
from ..judge import Judge
from ..propose import Proposer
from ..records import RunRecord
from ..wm import WorldModel
from .config import PlannerConfig
from .mpc import StepDecision, plan_step, reactive_step, rerank_only_step, termination_check
from .tree import tree_search_episode

log = logging.getLogger(__name__)

AGENTS = ("mpc", "reactive", "rerank_only", "no_refine", "tree_search")


class EpisodeError(RuntimeError):
    def __init__(self, message: str, record: RunRecord):
        super().__init__(message)
        self.record = record


@dataclass
class Components:
    proposer: Proposer
    world_model: Optional[WorldModel] = None
    judge: Optional[Judge] = None


def run_episode(agent: str, env: WebEnv, task: TaskInstance, cfg: PlannerConfig,
                parts: Components, strict: bool = False) -> RunRecord:
    """Plan and act until the termination rule fires.

    Failures produce a record with ``outcome="error"``; with ``strict`` the
    record is raised inside :class:`EpisodeError` instead of returned.
    """
    if agent not in AGENTS:
        raise ValueError(f"agent must be one of {AGENTS}")
    if agent == "tree_search":
        try:
            return tree_search_episode(env, task, cfg, parts.proposer, parts.judge)
        except Exception as exc:
            return _failed(agent, env, task, cfg, [], [], 0, 0.0, exc, strict)

    if agent == "no_refine":
        cfg = replace(cfg, refine=False)
    t0 = time.perf_counter()
    start_exec, start_irrev = env.execute_count, env.irreversible_executed
    max_steps = cfg.max_steps or task.max_steps
    history: list[Action] = []
    decisions: list[StepDecision] = []
    sims = 0
    reward = 0
    try:
        obs = env.reset(task)
        while True:
            if agent == "reactive":
                action = reactive_step(task, obs, history, parts.proposer)
            elif agent == "rerank_only":
                d = rerank_only_step(task, obs, history, cfg, parts.proposer, parts.judge)
                decisions.append(d)
                action = d.chosen
            else:
                d = plan_step(task, obs, history, cfg, parts.proposer, parts.world_model, parts.judge)
                decisions.append(d)
                sims += len(d.scored)
                action = d.chosen
            obs, terminal, r = env.execute(action)
            if terminal:
                reward = r
            done, reason = termination_check(history, action, len(history) + 1, cfg, max_steps)
            history.append(action)
            if done:
                break
    except Exception as exc:
        log.warning("episode %s/%s failed: %s", agent, task.id, exc)
        return _failed(agent, env, task, cfg, history, decisions, sims, time.perf_counter() - t0, exc, strict,
                       start_exec, start_irrev)
    return RunRecord(
        task_id=task.id,
        agent=agent,
        actions=history,
        decisions=decisions,
        reward=int(reward),
        milestones_satisfied=env.milestones_fraction(env.state, reward),
        real_action_count=env.execute_count - start_exec,
        simulated_trajectory_count=sims,
        irreversible_count=env.irreversible_executed - start_irrev,
        wall_clock_seconds=time.perf_counter() - t0,
        seed=cfg.sim.seed,
        config_digest=cfg.digest(),
        outcome=reason,
        site=env.graph.name,
        difficulty=task.difficulty,
    )


def _failed(agent, env, task, cfg, history, decisions, sims, elapsed, exc, strict,
            start_exec=None, start_irrev=None) -> RunRecord:
    record = RunRecord(
        task_id=task.id,
        agent=agent,
        actions=list(history),
        decisions=list(decisions),
        real_action_count=env.execute_count - start_exec if start_exec is not None else 0,
        simulated_trajectory_count=sims,
        irreversible_count=env.irreversible_executed - start_irrev if start_irrev is not None else 0,
        wall_clock_seconds=elapsed,
        seed=cfg.sim.seed,
        config_digest=cfg.digest(),
        outcome="error",
        site=env.graph.name,
        difficulty=task.difficulty,
        error=f"{type(exc).__name__}: {exc}",
    )
    if strict:
        raise EpisodeError(str(exc), record) from exc
    return record
