"""Site graphs: pages, guarded transitions, variables, tasks and goals, loaded from JSON."""
from __future__ import annotations

import json
import operator
import re
import string
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

from ..core import Action, ActionError, TaskInstance, action_signature, normalize_ws, parse_action_line

Scalar = Union[int, float, str, bool, None]

_OPS = {
    "==": operator.eq, "!=": operator.ne, ">=": operator.ge,
    "<=": operator.le, ">": operator.gt, "<": operator.lt,
}


class SiteError(Exception):
    pass


class ParseError(SiteError):
    def __init__(self, message: str, *, line: Optional[int] = None, field: Optional[str] = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.line = line
        self.field = field


class ValidationError(SiteError):
    pass


@dataclass(frozen=True)
class Condition:
    var: str
    op: str
    value: Scalar

    def holds(self, bindings: dict[str, Scalar]) -> bool:
        try:
            return bool(_OPS[self.op](bindings.get(self.var), self.value))
        except TypeError:
            return False


def conditions_hold(conds: tuple[Condition, ...], bindings: dict[str, Scalar]) -> bool:
    return all(c.holds(bindings) for c in conds)


@dataclass(frozen=True)
class ElementTemplate:
    id: Optional[int]
    tag: str
    text: str
    when: tuple[Condition, ...] = ()


@dataclass(frozen=True)
class Page:
    id: str
    url: str
    title: str
    elements: tuple[ElementTemplate, ...]


@dataclass(frozen=True)
class Update:
    var: str
    op: str  # "set" or "add"
    value: Scalar

    def apply(self, bindings: dict[str, Scalar]) -> None:
        if self.op == "add":
            bindings[self.var] = bindings[self.var] + self.value
        else:
            bindings[self.var] = self.value


@dataclass(frozen=True)
class TransitionEffect:
    source_page: str
    action: Action
    target_page: str
    canonical_change_description: str
    variable_updates: tuple[Update, ...] = ()
    guard: tuple[Condition, ...] = ()
    irreversible: bool = False
    prior: float = 1.0

    @property
    def signature(self) -> str:
        return action_signature(self.action)


@dataclass(frozen=True)
class Milestone:
    visited: Optional[str] = None
    condition: Optional[Condition] = None

    def satisfied(self, state) -> bool:
        if self.visited is not None:
            return self.visited in state.visited
        return self.condition.holds(state.binding_map)


def normalize_answer(text: Optional[str]) -> str:
    text = normalize_ws(text or "").lower()
    return text.strip(string.whitespace + "\"'`.!")


@dataclass(frozen=True)
class GoalSpec:
    kind: str  # reach_page | stop_with_answer | conjunction
    target_page: Optional[str] = None
    answers: tuple[str, ...] = ()
    required: tuple[Condition, ...] = ()
    milestones: tuple[Milestone, ...] = ()

    def state_satisfies(self, state) -> bool:
        """Whether a stop issued in ``state`` could be rewarded (answer aside)."""
        if self.target_page is not None and state.page != self.target_page:
            return False
        return conditions_hold(self.required, state.binding_map)

    def answer_matches(self, answer: Optional[str]) -> bool:
        if not self.answers:
            return True
        got = normalize_answer(answer)
        return any(got == normalize_answer(a) for a in self.answers)

    def rewarded(self, state, stop: Action) -> bool:
        return self.state_satisfies(state) and self.answer_matches(stop.answer)

    def expected_stop(self) -> Action:
        return Action.stop(self.answers[0] if self.answers else None)


@dataclass
class SiteGraph:
    name: str
    pages: dict[str, Page]
    transitions: list[TransitionEffect]
    variables: dict[str, Scalar]
    goals: dict[str, GoalSpec]
    tasks: dict[str, TaskInstance]
    hidden: frozenset[str] = frozenset()
    tags: frozenset[str] = frozenset()
    _index: dict[tuple[str, str], list[TransitionEffect]] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._index = {}
        for t in self.transitions:
            self._index.setdefault((t.source_page, t.signature), []).append(t)

    def effects(self, page: str, signature: str) -> list[TransitionEffect]:
        return self._index.get((page, signature), [])

    def outgoing(self, page: str) -> list[TransitionEffect]:
        return [t for t in self.transitions if t.source_page == page]

    def page_for_url(self, url: str) -> Optional[Page]:
        for p in self.pages.values():
            if p.url == url:
                return p
        return None

    def relevant_variables(self) -> frozenset[str]:
        """Variables that influence transitions or goals; the rest never change reachability."""
        names = set()
        for t in self.transitions:
            names.update(c.var for c in t.guard)
        for g in self.goals.values():
            names.update(c.var for c in g.required)
        return frozenset(names)


_VAR_REF = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")


def render_text(template: str, bindings: dict[str, Scalar]) -> str:
    return _VAR_REF.sub(lambda m: str(bindings[m.group(1)]), template)


# --- loading -----------------------------------------------------------------

def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise ParseError(f"missing key {key!r}", field=f"{where}.{key}")
    return obj[key]


def _parse_condition(raw: Any, where: str) -> Condition:
    if not isinstance(raw, dict):
        raise ParseError("condition must be an object", field=where)
    op = raw.get("op", "==")
    if op not in _OPS:
        raise ParseError(f"unknown operator {op!r}", field=where)
    return Condition(_require(raw, "var", where), op, _require(raw, "value", where))


def _parse_conditions(raw: Any, where: str) -> tuple[Condition, ...]:
    if raw is None:
        return ()
    if isinstance(raw, dict):
        raw = [raw]
    return tuple(_parse_condition(c, f"{where}[{i}]") for i, c in enumerate(raw))


def _parse_updates(raw: Any, where: str) -> tuple[Update, ...]:
    out = []
    for name, expr in (raw or {}).items():
        if isinstance(expr, dict):
            if set(expr) == {"add"}:
                out.append(Update(name, "add", expr["add"]))
            elif set(expr) == {"set"}:
                out.append(Update(name, "set", expr["set"]))
            else:
                raise ParseError("update expression must be {'set': v} or {'add': n}", field=f"{where}.{name}")
        else:
            out.append(Update(name, "set", expr))
    return tuple(out)


def _parse_milestone(raw: Any, where: str) -> Milestone:
    if isinstance(raw, dict) and "visited" in raw:
        return Milestone(visited=raw["visited"])
    return Milestone(condition=_parse_condition(raw, where))


def parse_site(doc: Any, name: str = "site") -> SiteGraph:
    if not isinstance(doc, dict):
        raise ParseError("site graph must be a JSON object")
    name = doc.get("name", name)
    pages = {}
    for pid, raw in _require(doc, "pages", "").items():
        where = f"pages.{pid}"
        elements = []
        for i, el in enumerate(raw.get("elements", [])):
            ew = f"{where}.elements[{i}]"
            elements.append(ElementTemplate(
                el.get("id"), _require(el, "tag", ew), _require(el, "text", ew),
                _parse_conditions(el.get("when"), f"{ew}.when"),
            ))
        pages[pid] = Page(pid, _require(raw, "url", where), raw.get("title", pid), tuple(elements))
    transitions = []
    for i, raw in enumerate(_require(doc, "transitions", "")):
        where = f"transitions[{i}]"
        try:
            action = parse_action_line(_require(raw, "action", where))
        except ActionError as exc:
            raise ParseError(str(exc), field=f"{where}.action") from exc
        transitions.append(TransitionEffect(
            source_page=_require(raw, "from", where),
            action=action,
            target_page=_require(raw, "to", where),
            canonical_change_description=_require(raw, "description", where),
            variable_updates=_parse_updates(raw.get("updates"), f"{where}.updates"),
            guard=_parse_conditions(raw.get("guard"), f"{where}.guard"),
            irreversible=bool(raw.get("irreversible", False)),
            prior=float(raw.get("prior", 1.0)),
        ))
    variables = dict(doc.get("variables", {}))
    goals = {}
    for tid, raw in doc.get("goals", {}).items():
        where = f"goals.{tid}"
        kind = _require(raw, "kind", where)
        answers = raw.get("answers", [])
        if isinstance(answers, str):
            answers = [answers]
        goals[tid] = GoalSpec(
            kind=kind,
            target_page=raw.get("target_page"),
            answers=tuple(answers),
            required=_parse_conditions(raw.get("required"), f"{where}.required"),
            milestones=tuple(_parse_milestone(m, f"{where}.milestones[{j}]")
                             for j, m in enumerate(raw.get("milestones", []))),
        )
    tasks = {}
    for i, raw in enumerate(doc.get("tasks", [])):
        where = f"tasks[{i}]"
        tid = _require(raw, "id", where)
        try:
            tasks[tid] = TaskInstance(
                id=tid,
                instruction=_require(raw, "instruction", where),
                start_page=_require(raw, "start_page", where),
                max_steps=int(raw.get("max_steps", 10)),
                instruction_image_refs=tuple(raw.get("image_refs", [])),
                site=name,
                difficulty=raw.get("difficulty", "medium"),
            )
        except ValueError as exc:
            raise ParseError(str(exc), field=where) from exc
    graph = SiteGraph(
        name=name, pages=pages, transitions=transitions, variables=variables,
        goals=goals, tasks=tasks, hidden=frozenset(doc.get("hidden", [])),
        tags=frozenset(doc.get("tags", [])),
    )
    validate_site(graph)
    return graph


def validate_site(g: SiteGraph) -> None:
    urls = {}
    for p in g.pages.values():
        if p.url in urls:
            raise ValidationError(f"pages {urls[p.url]!r} and {p.id!r} share url {p.url!r}")
        urls[p.url] = p.id
        ids = [e.id for e in p.elements if e.id is not None]
        if len(ids) != len(set(ids)):
            raise ValidationError(f"page {p.id!r} has duplicate element ids")
        for e in p.elements:
            for ref in _VAR_REF.findall(e.text):
                if ref not in g.variables:
                    raise ValidationError(f"page {p.id!r} references undeclared variable {ref!r}")
            _check_vars(g, e.when, f"page {p.id!r} element condition")
    for t in g.transitions:
        if t.source_page not in g.pages:
            raise ValidationError(f"transition {t.signature} starts on undeclared page {t.source_page!r}")
        if t.target_page not in g.pages:
            raise ValidationError(f"transition {t.signature} targets undeclared page {t.target_page!r}")
        if not t.canonical_change_description.strip():
            raise ValidationError(f"transition {t.signature} on {t.source_page!r} has an empty description")
        if t.action.kind == "stop":
            raise ValidationError("stop cannot be a transition; it ends the episode")
        _check_vars(g, t.guard, f"guard of {t.signature}")
        for u in t.variable_updates:
            if u.var not in g.variables:
                raise ValidationError(f"transition {t.signature} updates undeclared variable {u.var!r}")
    for h in g.hidden:
        if h not in g.variables:
            raise ValidationError(f"hidden variable {h!r} is not declared")
    for tid, goal in g.goals.items():
        if goal.kind not in ("reach_page", "stop_with_answer", "conjunction"):
            raise ValidationError(f"goal {tid!r} has unknown kind {goal.kind!r}")
        if goal.kind == "reach_page" and goal.target_page is None:
            raise ValidationError(f"reach_page goal {tid!r} needs target_page")
        if goal.kind == "stop_with_answer" and not goal.answers:
            raise ValidationError(f"stop_with_answer goal {tid!r} needs answers")
        if goal.target_page is not None and goal.target_page not in g.pages:
            raise ValidationError(f"goal {tid!r} targets undeclared page {goal.target_page!r}")
        _check_vars(g, goal.required, f"goal {tid!r}")
        for m in goal.milestones:
            if m.visited is not None and m.visited not in g.pages:
                raise ValidationError(f"goal {tid!r} milestone names undeclared page {m.visited!r}")
            if m.condition is not None:
                _check_vars(g, (m.condition,), f"goal {tid!r} milestone")
    for tid, task in g.tasks.items():
        if task.start_page not in g.pages:
            raise ValidationError(f"task {tid!r} starts on undeclared page {task.start_page!r}")
        if tid not in g.goals:
            raise ValidationError(f"task {tid!r} has no goal")


def _check_vars(g: SiteGraph, conds, what: str) -> None:
    for c in conds:
        if c.var not in g.variables:
            raise ValidationError(f"{what} references undeclared variable {c.var!r}")


def load_site(path: Union[str, Path]) -> SiteGraph:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if not text.strip():
        raise ParseError(f"{path} is empty", line=1)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from exc
    return parse_site(doc, name=path.stem)


FIXTURE_DIR = Path(__file__).parent / "fixtures"


def fixture_names() -> list[str]:
    return sorted(p.stem for p in FIXTURE_DIR.glob("*.json"))


def load_fixture(name: str) -> SiteGraph:
    return load_site(FIXTURE_DIR / f"{name}.json")
