"""Trajectory scoring on the three-level scale (done / on track / wrong)."""
from __future__ import annotations

import logging
import re
from collections import Counter
from typing import Optional, Sequence

from .core import Action, Observation, ScoredTrajectory, SimulatedTrajectory, TaskInstance
from .env.simulator import WebEnv, initial_state
from .lexical import content_words, overlap
from .llm.gateway import Gateway
from .llm.prompts import LLMConfig, judge_request

log = logging.getLogger(__name__)

_STATUS = re.compile(r"status\s*:\s*[\"'*`]*\s*(success|failure)", re.I)
_TRACK = re.compile(r"on the right track to success\s*:\s*[\"'*`]*\s*(yes|no)", re.I)


class MalformedJudgement(ValueError):
    pass


class AllSamplesMalformed(ValueError):
    pass


def parse_judgement(text: str) -> float:
    status, track = _STATUS.search(text), _TRACK.search(text)
    if status is None or track is None:
        raise MalformedJudgement(f"missing status or progress line in {text[:80]!r}")
    if status.group(1).lower() == "success":
        return 1.0
    return 0.5 if track.group(1).lower() == "yes" else 0.0


def aggregate_samples(texts: Sequence[str]) -> tuple[float, ...]:
    samples = []
    for t in texts:
        try:
            samples.append(parse_judgement(t))
        except MalformedJudgement as exc:
            log.warning("dropping judge sample: %s", exc)
    if not samples:
        raise AllSamplesMalformed(f"none of {len(texts)} judge samples parsed")
    return tuple(samples)


def lexical_action_score(task: TaskInstance, obs: Observation, action: Action) -> float:
    """Score an action from the visible page alone, without looking ahead.

    A stop whose answer is visible counts as done; an action whose element text
    shares content words with the instruction counts as on track.
    """
    if action.kind == "stop":
        seen = set()
        for el in obs.elements:
            seen |= content_words(el.text_content)
        return 1.0 if action.answer and content_words(action.answer) <= seen else 0.0
    el = obs.element(action.elem) if action.elem is not None else None
    label = (el.text_content if el is not None else "") + " " + (action.text or "")
    return 0.5 if overlap(task.instruction, label) > 0 else 0.0


class Judge:
    samples: int = 1

    def score_trajectory(self, task: TaskInstance, obs: Observation, history: Sequence[Action],
                         traj: SimulatedTrajectory, n: Optional[int] = None,
                         screenshots: Sequence[str] = ()) -> ScoredTrajectory:
        raise NotImplementedError

    def score_action(self, task: TaskInstance, obs: Observation, history: Sequence[Action],
                     action: Action, n: Optional[int] = None) -> tuple[float, ...]:
        raise NotImplementedError

    def score_state(self, task: TaskInstance, obs: Observation, history: Sequence[Action]) -> float:
        raise NotImplementedError


class OracleJudge(Judge):
    """Goal-distance judge over the believed end state of an oracle rollout."""

    def __init__(self, env: WebEnv):
        self.env = env

    def value(self, root, end, final_action: Optional[Action]) -> float:
        goal = self.env.goal
        if final_action is not None and final_action.kind == "stop":
            return 1.0 if goal.rewarded(end, final_action) else 0.0
        if goal.state_satisfies(end) and not goal.state_satisfies(root):
            return 1.0
        return 0.5 if self.env.oracle_distance(end) < self.env.oracle_distance(root) else 0.0

    def score_trajectory(self, task, obs, history, traj, n=None, screenshots=()):
        if traj.end_state is None:
            raise ValueError("the oracle judge needs a trajectory from the oracle world model")
        last = traj.actions[-1]
        return ScoredTrajectory(traj, (self.value(self.env.state, traj.end_state, last),))

    def score_action(self, task, obs, history, action, n=None):
        return (lexical_action_score(task, obs, action),)

    def score_state(self, task, obs, history):
        """Value of the current real state relative to the task's start page."""
        goal, state = self.env.goal, self.env.state
        if goal.state_satisfies(state):
            return 1.0
        start = self.env.oracle_distance(initial_state(self.env.graph, task.start_page))
        return 0.5 if self.env.oracle_distance(state) < start else 0.0


class LLMJudge(Judge):
    """Chat-model judge; ``n`` samples come from screenshot-order jitter at fixed temperature."""

    def __init__(self, gateway: Gateway, llm: LLMConfig = LLMConfig(), samples: int = 3):
        if samples < 1:
            raise ValueError("samples must be >= 1")
        self.gateway = gateway
        self.llm = llm
        self.samples = samples

    def _sample(self, build, n: int, screenshots: Sequence[str]) -> tuple[float, ...]:
        shots = list(screenshots)
        variants = Counter()
        order = []
        for i in range(n):
            rot = tuple(shots[i % len(shots):] + shots[:i % len(shots)]) if shots else ()
            if rot not in variants:
                order.append(rot)
            variants[rot] += 1
        texts = []
        for rot in order:
            texts.extend(self.gateway.complete(build(rot, variants[rot])))
        return aggregate_samples(texts)

    def score_trajectory(self, task, obs, history, traj, n=None, screenshots=()):
        n = n or self.samples
        if n < 1:
            raise ValueError("n must be >= 1")
        last = traj.steps[-1][1] if traj.steps else None

        def build(shots, count):
            return judge_request(task, history, obs, self.llm, changes=traj.changes,
                                 trailing_action=last, screenshots=shots, n=count)

        return ScoredTrajectory(traj, self._sample(build, n, screenshots or [obs.image_ref or ""]))

    def score_action(self, task, obs, history, action, n=None):
        n = n or self.samples

        def build(shots, count):
            return judge_request(task, history, obs, self.llm, direct_action=action,
                                 screenshots=shots, n=count)

        return self._sample(build, n, [obs.image_ref or ""])

    def score_state(self, task, obs, history):
        def build(shots, count):
            return judge_request(task, history, obs, self.llm, screenshots=shots, n=count)

        samples = self._sample(build, self.samples, [obs.image_ref or ""])
        return sum(samples) / len(samples)
