"""Deterministic POMDP website simulator and its site-graph format."""
from .graph import (
    FIXTURE_DIR,
    Condition,
    GoalSpec,
    Milestone,
    Page,
    ParseError,
    SiteError,
    SiteGraph,
    TransitionEffect,
    ValidationError,
    fixture_names,
    load_fixture,
    load_site,
    normalize_answer,
    parse_site,
)
from .simulator import (
    EnvError,
    EnvState,
    IrreversibleReplay,
    NotReset,
    UnknownTask,
    WebEnv,
    available_actions,
    initial_state,
    observe,
    oracle_distance,
    shortest_path,
    transition,
)

__all__ = [name for name in dir() if not name.startswith("_")]
