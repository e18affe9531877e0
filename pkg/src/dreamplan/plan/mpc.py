"""One planning step of each agent, plus the shared termination rule."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

from ..core import Action, Observation, ScoredTrajectory, SimulatedTrajectory, TaskInstance, action_signature
from ..judge import Judge
from ..propose import Proposer
from ..wm import WorldModel
from .config import PlannerConfig


@dataclass(frozen=True)
class StepDecision:
    candidates: tuple[Action, ...]
    refined: tuple[Action, ...]
    scored: tuple[ScoredTrajectory, ...]
    chosen: Action
    chosen_index: int
    low_confidence: bool = False

    def __post_init__(self):
        if self.refined[self.chosen_index] != self.chosen:
            raise ValueError("chosen must equal refined[chosen_index]")

    def to_json(self) -> dict:
        return {
            "candidates": [a.render() for a in self.candidates],
            "refined": [a.render() for a in self.refined],
            "scored": [
                {
                    "action": s.trajectory.candidate.render(),
                    "changes": [c.description for c in s.trajectory.changes],
                    "imagined": [a.render() for a in s.trajectory.actions[1:]],
                    "samples": list(s.samples),
                    "aggregate": s.aggregate,
                }
                for s in self.scored
            ],
            "chosen": self.chosen.render(),
            "chosen_index": self.chosen_index,
            "low_confidence": self.low_confidence,
        }


def select_best(scores: Sequence[float]) -> tuple[int, bool]:
    """Index of the highest score, lowest index on ties; flag set when every score is zero."""
    if not scores:
        raise ValueError("nothing to choose from")
    best = 0
    for i, s in enumerate(scores):
        if s > scores[best]:
            best = i
    return best, all(s == 0 for s in scores)


def termination_check(history: Sequence[Action], last_action: Action, step: int,
                      cfg: PlannerConfig, max_steps: Optional[int] = None) -> tuple[bool, Optional[str]]:
    """``history`` excludes ``last_action``; ``step`` counts executed actions so far."""
    if last_action.kind == "stop":
        return True, "stop_issued"
    sig = action_signature(last_action)
    sigs = [action_signature(a) for a in history] + [sig]
    if cfg.cumulative_repeats:
        count = sigs.count(sig)
    else:
        count = 0
        for s in reversed(sigs):
            if s != sig:
                break
            count += 1
    if count > cfg.repeat_limit:
        return True, "repeated_action"
    limit = max_steps if max_steps is not None else cfg.max_steps
    if limit is not None and step >= limit:
        return True, "max_steps"
    return False, None


def _fan_out(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def _refine(proposer: Proposer, task, obs, history, candidates, cfg: PlannerConfig) -> list[Action]:
    if not cfg.refine:
        return list(candidates)
    return proposer.self_refine(task, obs, history, candidates)


def plan_step(task: TaskInstance, obs: Observation, history: Sequence[Action], cfg: PlannerConfig,
              proposer: Proposer, world_model: WorldModel, judge: Judge) -> StepDecision:
    candidates = proposer.get_candidates(task, obs, history, cfg.k)
    refined = _refine(proposer, task, obs, history, candidates, cfg)

    def evaluate(a: Action) -> ScoredTrajectory:
        traj = world_model.simulate(obs, a, task, cfg.sim)
        return judge.score_trajectory(task, obs, history, traj, cfg.judge_samples)

    scored = _fan_out(evaluate, refined, cfg.max_workers)
    idx, low = select_best([s.aggregate for s in scored])
    return StepDecision(tuple(candidates), tuple(refined), tuple(scored), refined[idx], idx, low)


def rerank_only_step(task: TaskInstance, obs: Observation, history: Sequence[Action], cfg: PlannerConfig,
                     proposer: Proposer, judge: Judge) -> StepDecision:
    candidates = proposer.get_candidates(task, obs, history, cfg.k)
    refined = _refine(proposer, task, obs, history, candidates, cfg)
    root = obs.digest()

    def evaluate(a: Action) -> ScoredTrajectory:
        samples = judge.score_action(task, obs, history, a, cfg.judge_samples)
        return ScoredTrajectory(SimulatedTrajectory(root, a, (), cfg.sim.horizon), samples)

    scored = _fan_out(evaluate, refined, cfg.max_workers)
    idx, low = select_best([s.aggregate for s in scored])
    return StepDecision(tuple(candidates), tuple(refined), tuple(scored), refined[idx], idx, low)


def reactive_step(task: TaskInstance, obs: Observation, history: Sequence[Action], proposer: Proposer) -> Action:
    return proposer.reactive(task, obs, history)
