"""Prompt templates with ``{Slot Name}`` placeholders."""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Mapping

TEMPLATE_NAMES = ("action_proposal", "self_refinement", "world_model", "reward_model")

_SLOT = re.compile(r"\{([^{}\n]+)\}")


class MissingSlot(KeyError):
    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self):
        return f"no binding for template slot {{{self.name}}}"


def slots_in(body: str) -> frozenset[str]:
    return frozenset(_SLOT.findall(body))


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    body: str
    required_slots: frozenset[str] = None

    def __post_init__(self):
        found = slots_in(self.body)
        if self.required_slots is None:
            object.__setattr__(self, "required_slots", found)
        missing = set(self.required_slots) - found
        if missing:
            raise ValueError(f"template {self.name!r} lacks slots {sorted(missing)}")


def render_template(t: PromptTemplate, bindings: Mapping[str, str]) -> str:
    for slot in sorted(t.required_slots):
        if slot not in bindings:
            raise MissingSlot(slot)

    def sub(m: re.Match) -> str:
        name = m.group(1)
        return str(bindings[name]) if name in t.required_slots else m.group(0)

    # single pass, so braces inside bound values are never re-expanded
    return _SLOT.sub(sub, t.body)


@lru_cache(maxsize=None)
def load_template(name: str) -> PromptTemplate:
    if name not in TEMPLATE_NAMES:
        raise KeyError(f"unknown template {name!r}; expected one of {TEMPLATE_NAMES}")
    body = resources.files(__package__).joinpath("templates", f"{name}.txt").read_text(encoding="utf-8")
    return PromptTemplate(name, body)
