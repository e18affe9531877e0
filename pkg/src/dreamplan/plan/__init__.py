"""Agents: simulate-then-act planning, the reactive and rerank-only variants, and tree search."""
from .config import PlannerConfig, TreeConfig
from .episode import AGENTS, Components, EpisodeError, run_episode
from .mpc import StepDecision, plan_step, reactive_step, rerank_only_step, select_best, termination_check
from .tree import tree_search_episode

__all__ = [name for name in dir() if not name.startswith("_")]
