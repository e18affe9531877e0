"""Deterministic website simulator: transitions, observations, rewards and replay."""
from __future__ import annotations

import hashlib
import math
from collections import deque
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Union

from ..core import Action, ElementRecord, Observation, TaskInstance, action_signature
from .graph import GoalSpec, SiteGraph, TransitionEffect, conditions_hold, render_text

ERROR_TAG = "alert"
MAX_SEARCH_DEPTH = 64


class EnvError(Exception):
    pass


class NotReset(EnvError):
    pass


class UnknownTask(EnvError):
    pass


class IrreversibleReplay(EnvError):
    """Raised by a strict environment asked to replay across an irreversible transition."""


@dataclass(frozen=True)
class EnvState:
    page: str
    bindings: tuple[tuple[str, object], ...]
    history: tuple[str, ...] = ()
    irreversible_count: int = 0
    visited: tuple[str, ...] = ()
    last_action: Optional[Action] = None
    flash: Optional[str] = None

    @property
    def binding_map(self) -> dict:
        return dict(self.bindings)

    def key(self, variables: frozenset[str]) -> tuple:
        return (self.page, tuple((k, v) for k, v in self.bindings if k in variables))


def initial_state(graph: SiteGraph, page: str) -> EnvState:
    return EnvState(page=page, bindings=tuple(sorted(graph.variables.items())), visited=(page,))


def select_effect(graph: SiteGraph, state: EnvState, action: Action) -> Optional[TransitionEffect]:
    bindings = state.binding_map
    for effect in graph.effects(state.page, action_signature(action)):
        if conditions_hold(effect.guard, bindings):
            return effect
    return None


def apply_effect(state: EnvState, effect: TransitionEffect, action: Action) -> EnvState:
    bindings = state.binding_map
    for u in effect.variable_updates:
        u.apply(bindings)
    return EnvState(
        page=effect.target_page,
        bindings=tuple(sorted(bindings.items())),
        history=state.history + (action_signature(action),),
        irreversible_count=state.irreversible_count + int(effect.irreversible),
        visited=state.visited + (effect.target_page,),
        last_action=action,
    )


def transition(graph: SiteGraph, state: EnvState, action: Action) -> tuple[EnvState, Optional[TransitionEffect]]:
    """Pure T(s, a). Undefined actions leave the page untouched and raise an error banner."""
    effect = select_effect(graph, state, action)
    if effect is not None:
        return apply_effect(state, effect, action), effect
    if action.kind == "stop":
        return replace(state, history=state.history + (action_signature(action),),
                       last_action=action, flash=None), None
    return replace(
        state,
        history=state.history + (action_signature(action),),
        last_action=action,
        flash=f"Error: action '{action.render()}' had no effect on this page.",
    ), None


def observe(graph: SiteGraph, state: EnvState) -> Observation:
    """Pure projection of a state onto what the agent can see."""
    page = graph.pages[state.page]
    bindings = state.binding_map
    elements = [
        ElementRecord(el.id, el.tag, render_text(el.text, bindings))
        for el in page.elements
        if conditions_hold(el.when, bindings)
    ]
    if state.flash:
        elements.append(ElementRecord(None, ERROR_TAG, state.flash))
    visible = "|".join(f"{e.id}:{e.tag_type}:{e.text_content}" for e in elements)
    shot = hashlib.sha256(f"{graph.name}/{page.url}/{visible}".encode()).hexdigest()[:12]
    return Observation(
        url=page.url,
        elements=tuple(elements),
        open_tabs=((0, page.title),),
        previous_action=state.last_action,
        image_ref=f"screenshot:{graph.name}{page.url}#{shot}",
    )


def available_actions(graph: SiteGraph, state: EnvState) -> list[tuple[Action, TransitionEffect]]:
    """Actions with an enabled transition from ``state``, in file order, one per signature."""
    out, seen = [], set()
    for t in graph.outgoing(state.page):
        if t.signature in seen:
            continue
        effect = select_effect(graph, state, t.action)
        if effect is not None:
            seen.add(t.signature)
            out.append((t.action, effect))
    return out


def _bfs(graph: SiteGraph, state: EnvState, goal: GoalSpec, max_depth: int):
    """Shortest path to a goal-satisfying state; returns the action list or None."""
    if goal.state_satisfies(state):
        return []
    variables = graph.relevant_variables()
    parents = {state.key(variables): None}
    frontier = deque([(state, 0)])
    while frontier:
        s, depth = frontier.popleft()
        if depth >= max_depth:
            continue
        for action, effect in available_actions(graph, s):
            nxt = apply_effect(s, effect, action)
            k = nxt.key(variables)
            if k in parents:
                continue
            parents[k] = (s.key(variables), action)
            if goal.state_satisfies(nxt):
                path = []
                cur = k
                while parents[cur] is not None:
                    prev, act = parents[cur]
                    path.append(act)
                    cur = prev
                return path[::-1]
            frontier.append((nxt, depth + 1))
    return None


def oracle_distance(graph: SiteGraph, state: EnvState, goal: GoalSpec,
                    max_depth: int = MAX_SEARCH_DEPTH) -> Union[int, float]:
    path = _bfs(graph, state, goal, max_depth)
    return math.inf if path is None else len(path)


def shortest_path(graph: SiteGraph, state: EnvState, goal: GoalSpec,
                  max_depth: int = MAX_SEARCH_DEPTH) -> Optional[list[Action]]:
    return _bfs(graph, state, goal, max_depth)


class WebEnv:
    """A single-writer simulator instance bound to one site graph.

    ``execute_count`` and ``irreversible_executed`` accumulate across resets so
    search agents that restore states by replay are charged for every action.
    """

    def __init__(self, graph: SiteGraph, strict_irreversible: bool = False):
        self.graph = graph
        self.strict_irreversible = strict_irreversible
        self.task: Optional[TaskInstance] = None
        self._state: Optional[EnvState] = None
        self.terminal = False
        self.execute_count = 0
        self.irreversible_executed = 0
        self._distance_cache: dict = {}

    # -- episode control ------------------------------------------------
    def reset(self, task: Optional[TaskInstance] = None) -> Observation:
        if task is not None:
            if task.id not in self.graph.goals:
                raise UnknownTask(task.id)
            if task.start_page not in self.graph.pages:
                raise UnknownTask(f"{task.id}: start page {task.start_page!r} not in {self.graph.name}")
            self.task = task
        if self.task is None:
            raise NotReset("no task bound; call reset(task) first")
        self._state = initial_state(self.graph, self.task.start_page)
        self.terminal = False
        return self.observe()

    def execute(self, action: Action) -> tuple[Observation, bool, int]:
        if self._state is None:
            raise NotReset("execute before reset")
        if self.terminal:
            raise EnvError("episode already finished; reset first")
        self.execute_count += 1
        prev = self._state
        self._state, effect = transition(self.graph, prev, action)
        if effect is not None and effect.irreversible:
            self.irreversible_executed += 1
        if action.kind == "stop":
            self.terminal = True
            reward = int(self.goal.rewarded(prev, action))
            return self.observe(), True, reward
        return self.observe(), False, 0

    def replay(self, actions: Sequence[Action]) -> Observation:
        if self.task is None:
            raise NotReset("replay needs a bound task")
        obs = self.reset()
        for a in actions:
            if self.strict_irreversible:
                effect = select_effect(self.graph, self._state, a)
                if effect is not None and effect.irreversible:
                    raise IrreversibleReplay(f"refusing to replay irreversible {action_signature(a)}")
            obs, _, _ = self.execute(a)
        return obs

    # -- queries ----------------------------------------------------------
    @property
    def state(self) -> EnvState:
        if self._state is None:
            raise NotReset("no state before reset")
        return self._state

    @property
    def goal(self) -> GoalSpec:
        if self.task is None:
            raise NotReset("no task bound")
        return self.graph.goals[self.task.id]

    def observe(self, state: Optional[EnvState] = None) -> Observation:
        return observe(self.graph, self.state if state is None else state)

    def oracle_distance(self, state: Optional[EnvState] = None, goal: Optional[GoalSpec] = None):
        state = self.state if state is None else state
        goal = self.goal if goal is None else goal
        key = (goal, state.key(self.graph.relevant_variables()))
        if key not in self._distance_cache:
            self._distance_cache[key] = oracle_distance(self.graph, state, goal)
        return self._distance_cache[key]

    def milestones_fraction(self, state: Optional[EnvState] = None, reward: int = 0) -> float:
        """Fraction of goal milestones met; tasks without milestones fall back to the reward."""
        state = self.state if state is None else state
        ms = self.goal.milestones
        if not ms:
            return float(reward)
        return sum(m.satisfied(state) for m in ms) / len(ms)
