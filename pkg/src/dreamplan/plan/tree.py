"""Best-first search over real environment states, restored by reset plus replay."""
from __future__ import annotations

import heapq
import itertools
import time
from typing import Optional

from ..core import Action, TaskInstance
from ..env.simulator import WebEnv, initial_state, transition
from ..judge import Judge
from ..propose import Proposer
from ..records import RunRecord
from .config import PlannerConfig, TreeConfig


def _commit_stop(proposer: Proposer, task, obs, path, branching) -> Action:
    for a in proposer.get_candidates(task, obs, path, branching):
        if a.kind == "stop":
            return a
    return Action.stop()


def tree_search_episode(env: WebEnv, task: TaskInstance, cfg: PlannerConfig,
                        proposer: Proposer, judge: Judge) -> RunRecord:
    """Every execute, including replays used to restore a node, is charged to the record.

    A child is scored by the judge on its real observation. Reaching a value of
    1.0 commits: the agent issues a stop proposed at that state.
    """
    tree: TreeConfig = cfg.tree
    t0 = time.perf_counter()
    start_exec, start_irrev = env.execute_count, env.irreversible_executed
    obs = env.reset(task)
    tie = itertools.count()
    frontier: list = []
    seen = {obs.digest()}
    best_path: tuple[Action, ...] = ()
    best_value = judge.score_state(task, obs, ())
    expansions = 0
    reward = 0
    final_path: Optional[tuple[Action, ...]] = None

    if best_value >= 1.0:
        stop = _commit_stop(proposer, task, obs, [], tree.branching)
        _, _, reward = env.execute(stop)
        final_path = (stop,)
    else:
        heapq.heappush(frontier, (-best_value, next(tie), ()))

    while final_path is None and frontier and expansions < tree.expansion_budget:
        _, _, path = heapq.heappop(frontier)
        if len(path) >= tree.max_depth:
            continue
        obs = env.replay(path)
        candidates = [a for a in proposer.get_candidates(task, obs, path, tree.branching) if a.kind != "stop"]
        for i, a in enumerate(candidates):
            if expansions >= tree.expansion_budget:
                break
            if i > 0:
                env.replay(path)
            child_obs, _, _ = env.execute(a)
            expansions += 1
            child = path + (a,)
            digest = child_obs.digest()
            if digest in seen:
                continue
            seen.add(digest)
            value = judge.score_state(task, child_obs, child)
            if value > best_value:
                best_value, best_path = value, child
            if value >= 1.0:
                stop = _commit_stop(proposer, task, child_obs, list(child), tree.branching)
                _, _, reward = env.execute(stop)
                final_path = child + (stop,)
                break
            heapq.heappush(frontier, (-value, next(tie), child))

    if final_path is None:
        outcome, actions = "budget_exhausted", list(best_path)
    else:
        outcome, actions = "stop_issued", list(final_path)
    return RunRecord(
        task_id=task.id,
        agent="tree_search",
        actions=actions,
        reward=int(reward),
        milestones_satisfied=_milestones(env, task, actions, reward),
        real_action_count=env.execute_count - start_exec,
        irreversible_count=env.irreversible_executed - start_irrev,
        wall_clock_seconds=time.perf_counter() - t0,
        seed=cfg.sim.seed,
        config_digest=cfg.digest(),
        outcome=outcome,
        site=env.graph.name,
        difficulty=task.difficulty,
    )


def _milestones(env: WebEnv, task: TaskInstance, actions, reward) -> float:
    """Milestones along the committed path, computed without touching the environment."""
    state = initial_state(env.graph, task.start_page)
    for a in actions:
        state, _ = transition(env.graph, state, a)
    return env.milestones_fraction(state, reward)
