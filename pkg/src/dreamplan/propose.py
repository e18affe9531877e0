"""Candidate generation: frequency-ranked proposal samples and a fail-open refinement filter."""
from __future__ import annotations

import logging
import re
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

from .core import Action, ActionError, Observation, TaskInstance, action_signature, parse_action
from .llm.gateway import Gateway
from .llm.prompts import LLMConfig, proposal_request, refinement_request

log = logging.getLogger(__name__)

_SELECTED = re.compile(r"selected actions\s*:\s*(.*)", re.I)
_INDEX = re.compile(r"^a?id(\d+)$|^(\d+)$")


class NoValidCandidates(ValueError):
    pass


def rank_actions(actions: Sequence[Action], k: int) -> list[Action]:
    """Distinct actions by descending frequency, ties by first occurrence, at most ``k``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    counts = Counter(action_signature(a) for a in actions)
    first: dict[str, tuple[int, Action]] = {}
    for i, a in enumerate(actions):
        first.setdefault(action_signature(a), (i, a))
    ranked = sorted(first, key=lambda sig: (-counts[sig], first[sig][0]))
    return [first[sig][1] for sig in ranked[:k]]


def parse_samples(texts: Sequence[str]) -> list[Action]:
    out = []
    for t in texts:
        try:
            out.append(parse_action(t))
        except ActionError as exc:
            log.debug("dropping proposal sample: %s", exc)
    return out


def parse_selection(text: str, n_candidates: int) -> Optional[list[int]]:
    """Indices from a ``Selected actions:`` line, or None when the line is missing or empty.

    Out-of-range indices are dropped with a warning. ``aidN`` and ``idN`` are read as ``N``.
    """
    matches = _SELECTED.findall(text)
    if not matches:
        return None
    picked = []
    for tok in re.split(r"[;,\s]+", matches[-1].strip().strip("`*\"'.")):
        if not tok:
            continue
        m = _INDEX.match(tok.lower())
        if m is None:
            log.warning("ignoring selection token %r", tok)
            continue
        idx = int(m.group(1) or m.group(2))
        if idx >= n_candidates:
            log.warning("ignoring out-of-range selection %d (have %d candidates)", idx, n_candidates)
            continue
        if idx not in picked:
            picked.append(idx)
    return picked or None


@dataclass(frozen=True)
class ProposeConfig:
    k: int = 5
    m: int = 10

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.m < self.k:
            raise ValueError("m must be >= k")


class Proposer:
    def __init__(self, gateway: Gateway, llm: LLMConfig = LLMConfig(), cfg: ProposeConfig = ProposeConfig()):
        self.gateway = gateway
        self.llm = llm
        self.cfg = cfg

    def get_candidates(self, task: TaskInstance, obs: Observation, history: Sequence[Action],
                       k: Optional[int] = None) -> list[Action]:
        k = k or self.cfg.k
        m = max(self.cfg.m, k)
        texts = self.gateway.complete(proposal_request(task, obs, m, self.llm))
        actions = parse_samples(texts)
        if not actions:
            raise NoValidCandidates(f"none of {len(texts)} proposal samples parsed")
        return rank_actions(actions, k)

    def self_refine(self, task: TaskInstance, obs: Observation, history: Sequence[Action],
                    candidates: Sequence[Action]) -> list[Action]:
        if not candidates:
            raise ValueError("self_refine needs at least one candidate")
        candidates = list(candidates)
        try:
            reply = self.gateway.complete(refinement_request(task, obs, history, candidates, self.llm))[0]
        except Exception as exc:  # fail-open: a broken filter must not stall planning
            log.warning("self-refinement call failed (%s); keeping all candidates", exc)
            return candidates
        picked = parse_selection(reply, len(candidates))
        if picked is None:
            log.warning("unusable self-refinement reply; keeping all candidates")
            return candidates
        return [c for i, c in enumerate(candidates) if i in picked]

    def reactive(self, task: TaskInstance, obs: Observation, history: Sequence[Action]) -> Action:
        """One proposal sample, parsed as-is."""
        return parse_action(self.gateway.complete(proposal_request(task, obs, 1, self.llm))[0])
