"""World models: predict what an action would change, then imagine the next action.

Two implementations share one rollout loop. :class:`OracleWorldModel` reads the
bound environment's true transition table (never executing anything) and can be
degraded with a seeded fidelity knob. :class:`LLMWorldModel` asks a chat model.
"""
from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from typing import Optional, Sequence

from .core import (
    Action,
    ActionError,
    Observation,
    SimulatedTrajectory,
    StateChange,
    TaskInstance,
    action_signature,
    parse_action,
)
from .env.render import RENDERERS
from .env.simulator import EnvState, WebEnv, apply_effect, shortest_path, transition
from .llm.gateway import Gateway
from .llm.prompts import LLMConfig, proposal_request, world_model_request

REPRESENTATIONS = ("change_description", "full_html", "accessibility_tree")
STOP_DESCRIPTION = "The agent stops here; the page does not change."


class SimulationError(RuntimeError):
    pass


class MalformedPrediction(ValueError):
    pass


class UnknownTransition(LookupError):
    pass


@dataclass(frozen=True)
class SimConfig:
    horizon: int = 1
    state_representation: str = "change_description"
    fidelity: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if not 0.0 <= self.fidelity <= 1.0:
            raise ValueError("fidelity must lie in [0, 1]")
        if self.state_representation not in REPRESENTATIONS:
            raise ValueError(f"state_representation must be one of {REPRESENTATIONS}")


class WorldModel:
    """Shared rollout: predict, imagine, predict, ... for up to ``horizon`` changes."""

    cfg: SimConfig

    def predict_state_change(self, obs: Observation, prior_changes: Sequence[StateChange],
                             a: Action, task: Optional[TaskInstance] = None) -> StateChange:
        raise NotImplementedError

    def imagine_action(self, obs: Observation, changes: Sequence[StateChange],
                       task: TaskInstance) -> Action:
        raise NotImplementedError

    def simulate(self, obs: Observation, candidate: Action, task: TaskInstance,
                 cfg: Optional[SimConfig] = None) -> SimulatedTrajectory:
        cfg = cfg or self.cfg
        try:
            return self._rollout(obs, candidate, task, cfg)
        except SimulationError:
            raise
        except (MalformedPrediction, UnknownTransition, ActionError) as exc:
            raise SimulationError(f"simulating {candidate.render()}: {exc}") from exc

    def _rollout(self, obs, candidate, task, cfg) -> SimulatedTrajectory:
        changes: list[StateChange] = []
        steps = []
        action = candidate
        for _ in range(cfg.horizon):
            change = self.predict_state_change(obs, changes, action, task)
            changes.append(change)
            if len(changes) == cfg.horizon or action.kind == "stop":
                steps.append((change, None))
                break
            nxt = self.imagine_action(obs, changes, task)
            steps.append((change, nxt))
            if nxt.kind == "stop":
                break
            action = nxt
        return SimulatedTrajectory(obs.digest(), candidate, tuple(steps), cfg.horizon)


class OracleWorldModel(WorldModel):
    """Ground-truth simulator with per-step seeded corruption.

    Each predicted step is faithful with probability ``fidelity``. An unfaithful
    step reports the description of another transition drawn uniformly from the
    same graph, and the believed state then follows that transition, so later
    steps build on the hallucination. Stop steps are always predicted exactly.
    The object holds no per-call state; concurrent rollouts are safe.
    """

    def __init__(self, env: WebEnv, cfg: SimConfig = SimConfig()):
        self.env = env
        self.cfg = cfg
        graph = env.graph
        self._pool = sorted(
            {t.canonical_change_description: t for t in graph.transitions}.items()
        )

    # -- seeded per-step randomness -------------------------------------
    def _rng(self, cfg: SimConfig, task: TaskInstance, root: EnvState, candidate: Action, step: int) -> random.Random:
        blob = "|".join([
            str(cfg.seed), task.id, self.env.observe(root).digest(),
            action_signature(candidate), str(step), str(len(root.history)),
        ])
        return random.Random(int.from_bytes(hashlib.sha256(blob.encode()).digest()[:8], "big"))

    def _describe(self, state: EnvState, effect, action: Action, cfg: SimConfig) -> str:
        if cfg.state_representation != "change_description":
            return RENDERERS[cfg.state_representation](self.env.graph, state)
        if effect is not None:
            return effect.canonical_change_description
        return state.flash or STOP_DESCRIPTION

    def step(self, state: EnvState, action: Action, rng: random.Random,
             cfg: SimConfig) -> tuple[str, EnvState, bool]:
        """One predicted step from a believed state: (description, next believed state, faithful)."""
        graph = self.env.graph
        if state.page not in graph.pages:
            raise UnknownTransition(f"no page {state.page!r} in {graph.name}")
        true_next, effect = transition(graph, state, action)
        if action.kind == "stop" or rng.random() < cfg.fidelity:
            return self._describe(true_next, effect, action, cfg), true_next, True
        true_desc = effect.canonical_change_description if effect is not None else None
        choices = [t for desc, t in self._pool if desc != true_desc]
        if not choices:
            raise UnknownTransition(f"no distractor available for {action_signature(action)}")
        fake = rng.choice(choices)
        believed = apply_effect(state, fake, action)
        if cfg.state_representation == "change_description":
            return fake.canonical_change_description, believed, False
        return self._describe(believed, fake, action, cfg), believed, False

    def _imagine_from(self, state: EnvState, task: TaskInstance) -> Action:
        goal = self.env.graph.goals[task.id]
        path = shortest_path(self.env.graph, state, goal)
        if path is None:
            return Action.stop()
        if not path:
            return goal.expected_stop()
        return path[0]

    def _believed(self, task: TaskInstance, changes: Sequence[StateChange], cfg: SimConfig) -> EnvState:
        """Re-derive the believed state after ``changes`` (deterministic under the seed)."""
        root = self.env.state
        state = root
        for i, c in enumerate(changes, 1):
            _, state, _ = self.step(state, c.producing_action, self._rng(cfg, task, root, changes[0].producing_action, i), cfg)
        return state

    def predict_state_change(self, obs, prior_changes, a, task=None):
        task = task or self.env.task
        cfg = self.cfg
        root = self.env.state
        state = self._believed(task, prior_changes, cfg)
        first = prior_changes[0].producing_action if prior_changes else a
        step = len(prior_changes) + 1
        desc, _, _ = self.step(state, a, self._rng(cfg, task, root, first, step), cfg)
        return StateChange(desc, step, a)

    def imagine_action(self, obs, changes, task):
        if not changes:
            raise ValueError("imagine_action needs at least one predicted change")
        return self._imagine_from(self._believed(task, changes, self.cfg), task)

    def _rollout(self, obs, candidate, task, cfg) -> SimulatedTrajectory:
        root = self.env.state
        state = root
        steps, faithful = [], []
        action = candidate
        for i in range(1, cfg.horizon + 1):
            desc, state, ok = self.step(state, action, self._rng(cfg, task, root, candidate, i), cfg)
            faithful.append(ok)
            change = StateChange(desc, i, action)
            if i == cfg.horizon or action.kind == "stop":
                steps.append((change, None))
                break
            nxt = self._imagine_from(state, task)
            steps.append((change, nxt))
            if nxt.kind == "stop":
                break
            action = nxt
        return SimulatedTrajectory(obs.digest(), candidate, tuple(steps), cfg.horizon,
                                   end_state=state, faithful=tuple(faithful))


class LLMWorldModel(WorldModel):
    def __init__(self, gateway: Gateway, llm: LLMConfig = LLMConfig(), cfg: SimConfig = SimConfig()):
        self.gateway = gateway
        self.llm = llm
        self.cfg = cfg

    def predict_state_change(self, obs, prior_changes, a, task=None):
        req = world_model_request(obs, prior_changes, a, self.llm, self.cfg.state_representation)
        reply = self.gateway.complete(req)[0].strip()
        marker = "State changes:"
        if not reply.startswith(marker):
            raise MalformedPrediction(f"reply lacks {marker!r}: {reply[:80]!r}")
        desc = reply[len(marker):].strip()
        if not desc:
            raise MalformedPrediction("empty state-change description")
        return StateChange(desc, len(prior_changes) + 1, a)

    def imagine_action(self, obs, changes, task):
        if not changes:
            raise ValueError("imagine_action needs at least one predicted change")
        req = proposal_request(task, obs, 1, self.llm, predicted=changes)
        return parse_action(self.gateway.complete(req)[0])
