"""Shared domain types, the browser action grammar and observation rendering."""
from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from typing import Optional, Sequence

ACTION_KINDS = (
    "click", "hover", "type", "press", "goto", "go_back", "go_forward",
    "new_tab", "tab_focus", "tab_close", "scroll", "stop",
)
# Alternate spellings seen in prompts and model output.
_KIND_ALIASES = {"close_tab": "tab_close"}

SUMMARY_PHRASE = "In summary, the next action I will perform is"

_ALL_FIELDS = ("elem", "text", "key_comb", "url", "tab_index", "direction", "answer")
_REQUIRED = {
    "click": ("elem",),
    "hover": ("elem",),
    "type": ("elem", "text"),
    "press": ("key_comb",),
    "goto": ("url",),
    "go_back": (),
    "go_forward": (),
    "new_tab": (),
    "tab_focus": ("tab_index",),
    "tab_close": (),
    "scroll": ("direction",),
    "stop": (),
}
_OPTIONAL = {"stop": ("answer",)}


class ActionError(ValueError):
    pass


class MissingSummaryPhrase(ActionError):
    pass


class MalformedAction(ActionError):
    pass


def normalize_ws(text: str) -> str:
    return " ".join(text.split())


def _escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace("[", "\\[").replace("]", "\\]")


def _unescape(text: str) -> str:
    return re.sub(r"\\(.)", r"\1", text)


@dataclass(frozen=True)
class Action:
    """One browser action. Free-text fields are whitespace-normalized on construction."""

    kind: str
    elem: Optional[int] = None
    text: Optional[str] = None
    press_enter_after: bool = True
    key_comb: Optional[str] = None
    url: Optional[str] = None
    tab_index: Optional[int] = None
    direction: Optional[str] = None
    answer: Optional[str] = None

    def __post_init__(self):
        kind = _KIND_ALIASES.get(self.kind, self.kind)
        if kind not in _REQUIRED:
            raise MalformedAction(f"unknown action kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        for name in ("text", "key_comb", "url", "answer"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, normalize_ws(value))
        if kind == "stop" and self.answer == "":
            object.__setattr__(self, "answer", None)
        allowed = set(_REQUIRED[kind]) | set(_OPTIONAL.get(kind, ()))
        for name in _ALL_FIELDS:
            present = getattr(self, name) is not None
            if name in _REQUIRED[kind] and not present:
                raise MalformedAction(f"{kind} requires {name}")
            if present and name not in allowed:
                raise MalformedAction(f"{kind} does not take {name}")
        if kind != "type" and not self.press_enter_after:
            raise MalformedAction("press_enter_after only applies to type")
        for name in ("elem", "tab_index"):
            value = getattr(self, name)
            if value is not None and (isinstance(value, bool) or not isinstance(value, int) or value < 0):
                raise MalformedAction(f"{name} must be a nonnegative integer, got {value!r}")
        if self.direction is not None:
            direction = self.direction.lower()
            if direction not in ("up", "down"):
                raise MalformedAction(f"scroll direction must be up or down, got {self.direction!r}")
            object.__setattr__(self, "direction", direction)

    # convenience constructors
    @classmethod
    def click(cls, elem: int) -> "Action":
        return cls("click", elem=elem)

    @classmethod
    def type_text(cls, elem: int, text: str, press_enter_after: bool = True) -> "Action":
        return cls("type", elem=elem, text=text, press_enter_after=press_enter_after)

    @classmethod
    def stop(cls, answer: Optional[str] = None) -> "Action":
        return cls("stop", answer=answer)

    def args(self) -> list[str]:
        k = self.kind
        if k in ("click", "hover"):
            return [str(self.elem)]
        if k == "type":
            return [str(self.elem), self.text, "1" if self.press_enter_after else "0"]
        if k == "press":
            return [self.key_comb]
        if k == "goto":
            return [self.url]
        if k == "tab_focus":
            return [str(self.tab_index)]
        if k == "scroll":
            return [self.direction]
        if k == "stop":
            return [self.answer or ""]
        return []

    def render(self) -> str:
        """Grammar form as a model would write it, e.g. ``type [12] [red dress] [0]``."""
        args = self.args()
        if not args:
            return self.kind
        return self.kind + " " + " ".join(f"[{_escape(a)}]" for a in args)


def action_signature(a: Action) -> str:
    """Canonical key for an action: ``click[1234]``, ``type[12][red dress][1]``, ``go_back``."""
    return a.kind + "".join(f"[{_escape(x)}]" for x in a.args())


_BRACKET_ARG = re.compile(r"\s*\[((?:\\.|[^\\\]])*)\]")
_KIND_RE = re.compile(r"[A-Za-z_]+")


def _parse_action_text(text: str) -> Action:
    body = text.strip().lstrip("`'\"*: ").strip()
    m = _KIND_RE.match(body)
    if not m:
        raise MalformedAction(f"no action kind in {text!r}")
    kind = m.group(0).lower()
    kind = _KIND_ALIASES.get(kind, kind)
    if kind not in _REQUIRED:
        raise MalformedAction(f"unknown action kind {m.group(0)!r}")
    pos = m.end()
    args = []
    while True:
        am = _BRACKET_ARG.match(body, pos)
        if not am:
            break
        args.append(_unescape(am.group(1)))
        pos = am.end()
    return _action_from_args(kind, args)


def _to_index(value: str, what: str) -> int:
    value = value.strip()
    if not value.isdigit():
        raise MalformedAction(f"{what} must be a nonnegative integer, got {value!r}")
    return int(value)


def _action_from_args(kind: str, args: list[str]) -> Action:
    n = len(args)

    def arity(*allowed: int) -> None:
        if n not in allowed:
            raise MalformedAction(f"{kind} takes {' or '.join(map(str, allowed))} arguments, got {n}")

    if kind in ("click", "hover"):
        arity(1)
        return Action(kind, elem=_to_index(args[0], "element id"))
    if kind == "type":
        arity(2, 3)
        enter = True
        if n == 3:
            flag = args[2].strip()
            if flag not in ("0", "1"):
                raise MalformedAction(f"press_enter_after must be 0 or 1, got {flag!r}")
            enter = flag == "1"
        return Action("type", elem=_to_index(args[0], "element id"), text=args[1], press_enter_after=enter)
    if kind == "press":
        arity(1)
        return Action("press", key_comb=args[0])
    if kind == "goto":
        arity(1)
        return Action("goto", url=args[0])
    if kind == "tab_focus":
        arity(1)
        return Action("tab_focus", tab_index=_to_index(args[0], "tab index"))
    if kind == "scroll":
        arity(1)
        return Action("scroll", direction=args[0].strip())
    if kind == "stop":
        arity(0, 1)
        answer = normalize_ws(args[0]) if n else ""
        return Action("stop", answer=answer or None)
    arity(0)
    return Action(kind)


def parse_action(completion_text: str) -> Action:
    """Parse the action following the last summary phrase in a completion."""
    idx = completion_text.rfind(SUMMARY_PHRASE)
    if idx < 0:
        raise MissingSummaryPhrase("completion has no action summary phrase")
    return _parse_action_text(completion_text[idx + len(SUMMARY_PHRASE):])


def parse_action_line(text: str) -> Action:
    """Parse a bare grammar string such as ``click [3]``."""
    return _parse_action_text(text)


@dataclass(frozen=True)
class ElementRecord:
    id: Optional[int]
    tag_type: str
    text_content: str


STATIC_TAG = "StaticText"


def render_element(el: ElementRecord) -> str:
    ident = "" if el.id is None else str(el.id)
    text = _escape(el.text_content)
    if el.tag_type != STATIC_TAG:
        text = f"'{text}'"
    return f"[{ident}][{_escape(el.tag_type)}][{text}]"


@dataclass(frozen=True)
class Observation:
    url: str
    elements: tuple[ElementRecord, ...] = ()
    open_tabs: tuple[tuple[int, str], ...] = ((0, ""),)
    previous_action: Optional[Action] = None
    image_ref: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        object.__setattr__(self, "open_tabs", tuple(tuple(t) for t in self.open_tabs))
        seen = set()
        for el in self.elements:
            if el.id is None:
                continue
            if el.id in seen:
                raise ValueError(f"duplicate element id {el.id}")
            seen.add(el.id)

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(self.url.encode())
        h.update(b"\0")
        h.update(render_observation(self).encode())
        h.update(b"\0")
        h.update(render_tabs(self.open_tabs).encode())
        return h.hexdigest()[:16]

    def element(self, elem_id: int) -> Optional[ElementRecord]:
        for el in self.elements:
            if el.id == elem_id:
                return el
        return None


def render_observation(obs: Observation) -> str:
    return "\n".join(render_element(el) for el in obs.elements)


_ELEMENT_LINE = re.compile(r"^\[(\d*)\]\[((?:\\.|[^\\\]])*)\]\[((?:\\.|[^\\\]])*)\]$")


def parse_observation(text: str) -> list[ElementRecord]:
    """Inverse of :func:`render_observation`."""
    out = []
    for line in text.splitlines():
        if not line:
            continue
        m = _ELEMENT_LINE.match(line)
        if not m:
            raise ValueError(f"not an element line: {line!r}")
        ident, tag, content = m.groups()
        tag = _unescape(tag)
        if tag != STATIC_TAG:
            if len(content) < 2 or content[0] != "'" or content[-1] != "'":
                raise ValueError(f"interactable element text must be quoted: {line!r}")
            content = content[1:-1]
        out.append(ElementRecord(int(ident) if ident else None, tag, _unescape(content)))
    return out


def render_tabs(tabs: Sequence[tuple[int, str]]) -> str:
    return ", ".join(f"Tab {i}: {title}" for i, title in tabs)


@dataclass(frozen=True)
class TaskInstance:
    id: str
    instruction: str
    start_page: str
    max_steps: int = 10
    instruction_image_refs: tuple[str, ...] = ()
    site: str = ""
    difficulty: str = "medium"

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        object.__setattr__(self, "instruction_image_refs", tuple(self.instruction_image_refs))


@dataclass(frozen=True)
class StateChange:
    description: str
    step_index: int
    producing_action: Action

    def __post_init__(self):
        if not self.description.strip():
            raise ValueError("state change description must be non-empty")
        if self.step_index < 1:
            raise ValueError("step_index is 1-based")


@dataclass(frozen=True)
class SimulatedTrajectory:
    """A candidate action followed by predicted changes and imagined follow-up actions.

    ``steps[i]`` pairs the i-th predicted change with the action imagined after it
    (``None`` on the last step). ``end_state`` and ``faithful`` are filled only by
    the oracle world model.
    """

    root: str
    candidate: Action
    steps: tuple[tuple[StateChange, Optional[Action]], ...]
    horizon: int
    end_state: object = field(default=None, compare=False)
    faithful: tuple[bool, ...] = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if len(self.steps) > self.horizon:
            raise ValueError("more state changes than the horizon allows")
        if self.steps and self.steps[0][0].producing_action != self.candidate:
            raise ValueError("first simulated action must be the candidate")
        for change, imagined in self.steps[:-1]:
            if imagined is None:
                raise ValueError("every step but the last must carry an imagined action")

    @property
    def changes(self) -> list[StateChange]:
        return [c for c, _ in self.steps]

    @property
    def actions(self) -> list[Action]:
        """Candidate plus every imagined action, in order."""
        acts = [self.candidate]
        acts.extend(a for _, a in self.steps if a is not None)
        return acts

    @property
    def fully_faithful(self) -> bool:
        return bool(self.faithful) and all(self.faithful)


SCORE_LEVELS = (0.0, 0.5, 1.0)


@dataclass(frozen=True)
class ScoredTrajectory:
    trajectory: SimulatedTrajectory
    samples: tuple[float, ...]
    aggregate: float = -1.0

    def __post_init__(self):
        samples = tuple(float(s) for s in self.samples)
        if not samples:
            raise ValueError("at least one judge sample is required")
        if any(s not in SCORE_LEVELS for s in samples):
            raise ValueError(f"samples must be in {SCORE_LEVELS}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "aggregate", sum(samples) / len(samples))
