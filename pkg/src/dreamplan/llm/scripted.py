"""An offline transport that answers the four planning prompts from fixture site graphs.

It stands in for a chat model so every agent can run (and be recorded/replayed)
without network access. It only sees what the prompt shows: the URL, the task
objective, the element list and any simulated steps. It has no access to hidden
variables and ignores transition guards, so its world-model and judge answers are
page-level approximations.
"""
from __future__ import annotations

import math
import re
from collections import deque
from typing import Iterable, Optional

from ..core import Action, ActionError, action_signature, parse_action_line
from ..env.graph import GoalSpec, SiteGraph, render_text
from ..env.render import RENDERERS
from ..env.simulator import initial_state
from ..lexical import content_words, overlap
from .gateway import CompletionRequest

_OBJECTIVE = re.compile(r"The user's objective: (.*?) This is the task you're trying to complete\.", re.S)
_PROPOSAL_URL = re.compile(r"The current web page's URL: (\S+) This is the page")
_LINE_URL = re.compile(r"^(?:Current )?URL: (\S+)$", re.M)
_INTENT = re.compile(r"^User Intent: (.*)$", re.M)
_STEP_ACTION = re.compile(r"^Step \d+ action: (.*)$", re.M)
_CANDIDATE = re.compile(r"^(\d+): (.*)$", re.M)
_DIRECT = re.compile(r"^Proposed next action: (.*)$", re.M)
_WM_ACTION = re.compile(r"predict the changes after action: (.*)$", re.S)

NO_EFFECT = "Nothing on the page will change; an error message will say the action had no effect."
STOP_EFFECT = "The agent will stop and the page will stay as it is."


def allocate(weighted: list[tuple[Action, float]], n: int) -> list[Action]:
    """Deterministically spread ``n`` samples over weighted actions.

    Every action gets one sample (highest weight first) while samples last; the
    remainder is split in proportion to weight by largest remainder.
    """
    order = sorted(range(len(weighted)), key=lambda i: -weighted[i][1])
    counts = [0] * len(weighted)
    for i in order[:n]:
        counts[i] = 1
    rest = n - sum(counts)
    if rest > 0:
        total = sum(w for _, w in weighted)
        quotas = [rest * w / total for _, w in weighted]
        for i, q in enumerate(quotas):
            counts[i] += math.floor(q)
        left = n - sum(counts)
        by_frac = sorted(order, key=lambda i: -(quotas[i] - math.floor(quotas[i])))
        for i in by_frac[:left]:
            counts[i] += 1
    out = []
    for i in order:
        out.extend([weighted[i][0]] * counts[i])
    return out


class ScriptedSiteModel:
    supports_n = True

    def __init__(self, graphs: Iterable[SiteGraph], stop_boost: float = 3.0):
        self.graphs = list(graphs)
        self.stop_boost = stop_boost
        self.calls = 0
        self._descriptions = {}
        for g in self.graphs:
            for t in g.transitions:
                self._descriptions.setdefault((g.name, t.canonical_change_description), t.target_page)

    # -- lookups -----------------------------------------------------------
    def locate(self, url: str) -> tuple[Optional[SiteGraph], Optional[str]]:
        for g in self.graphs:
            page = g.page_for_url(url)
            if page is not None:
                return g, page.id
        return None, None

    def find_task(self, instruction: str):
        for g in self.graphs:
            for t in g.tasks.values():
                if t.instruction == instruction.strip():
                    return t, g.goals[t.id]
        return None, None

    @staticmethod
    def _first_effect(g: SiteGraph, page: str, action: Action):
        effects = g.effects(page, action_signature(action))
        return effects[0] if effects else None

    def _follow(self, g: SiteGraph, page: str, actions: list[Action]) -> str:
        for a in actions:
            eff = self._first_effect(g, page, a)
            if eff is not None:
                page = eff.target_page
        return page

    @staticmethod
    def _page_distance(g: SiteGraph, page: str, goal: GoalSpec) -> float:
        if goal.target_page is None or page == goal.target_page:
            return 0
        seen = {page}
        q = deque([(page, 0)])
        while q:
            p, d = q.popleft()
            for t in g.outgoing(p):
                if t.target_page == goal.target_page:
                    return d + 1
                if t.target_page not in seen:
                    seen.add(t.target_page)
                    q.append((t.target_page, d + 1))
        return math.inf

    # -- dispatch ------------------------------------------------------------
    def __call__(self, req: CompletionRequest) -> list[str]:
        self.calls += 1
        head = req.messages[0].text
        if head.startswith("You are an autonomous intelligent agent"):
            return self._propose(req)
        if head.startswith("You are assiting"):
            return [self._refine(req)] * req.n_samples
        if head.startswith("You are an agent that predicts"):
            return [self._predict(req)] * req.n_samples
        if head.startswith("You are an expert in evaluating"):
            return [self._judge(req)] * req.n_samples
        return ["I am not sure what to do."] * req.n_samples

    def _element_text(self, g: SiteGraph, page: str, elem: Optional[int]) -> str:
        for el in g.pages[page].elements:
            if el.id == elem:
                return render_text(el.text, g.variables)
        return ""

    def proposal_weights(self, g: SiteGraph, page: str, instruction: str,
                         goal: Optional[GoalSpec]) -> list[tuple[Action, float]]:
        out, seen = [], set()
        for t in g.outgoing(page):
            if t.signature in seen:
                continue
            seen.add(t.signature)
            label = self._element_text(g, page, t.action.elem) + " " + (t.action.text or "")
            out.append((t.action, t.prior * (1 + 2 * overlap(instruction, label))))
        if goal is not None and page == goal.target_page:
            top = max((w for _, w in out), default=1.0)
            out.insert(0, (goal.expected_stop(), self.stop_boost * top))
        if not out:
            out.append((Action("scroll", direction="down"), 1.0))
        return out

    def _propose(self, req: CompletionRequest) -> list[str]:
        text = req.messages[0].text
        url_m, obj_m = _PROPOSAL_URL.search(text), _OBJECTIVE.search(text)
        g, page = self.locate(url_m.group(1)) if url_m else (None, None)
        if g is None or obj_m is None:
            return ["The page is unfamiliar. In summary, the next action I will perform is scroll [down]"] * req.n_samples
        instruction = obj_m.group(1)
        _, goal = self.find_task(instruction)
        marker = "Predicted state changes so far:"
        if marker in text:
            block = text.split(marker, 1)[1].split("\n\n", 1)[0]
            lines = [ln.split(". ", 1)[1] for ln in block.strip().splitlines() if ". " in ln]
            if lines:
                page = self._descriptions.get((g.name, lines[-1]), page)
        samples = allocate(self.proposal_weights(g, page, instruction, goal), req.n_samples)
        return [
            f"Let's think step by step. The objective is: {instruction} "
            f"In summary, the next action I will perform is ```{a.render()}```"
            for a in samples
        ]

    def _refine(self, req: CompletionRequest) -> str:
        text = req.messages[0].text
        url_m = re.search(r"Current URL: (\S+)", text)
        g, page = self.locate(url_m.group(1)) if url_m else (None, None)
        block = text.split("Proposed Action:", 1)[1].split("\n\nUser Intent:", 1)[0]
        keep = []
        for m in _CANDIDATE.finditer(block):
            try:
                a = parse_action_line(m.group(2))
            except ActionError:
                continue
            if g is None or a.kind == "stop" or g.effects(page, action_signature(a)):
                keep.append(m.group(1))
        if not keep:
            keep = ["0"]
        return "Thoughts: keep every action that does something on this page.\nSelected actions: " + ";".join(keep)

    def _predict(self, req: CompletionRequest) -> str:
        system, user = req.messages[0].text, req.messages[1].text
        url_m = _LINE_URL.search(user)
        act_m = _WM_ACTION.search(system)
        g, page = self.locate(url_m.group(1)) if url_m else (None, None)
        if g is None or act_m is None:
            return "State changes: " + NO_EFFECT
        prior = [parse_action_line(s) for s in _STEP_ACTION.findall(user)]
        page = self._follow(g, page, prior)
        action = parse_action_line(act_m.group(1))
        eff = self._first_effect(g, page, action)
        for representation, renderer in RENDERERS.items():
            if ("complete HTML" if representation == "full_html" else "accessibility tree") in user:
                target = eff.target_page if eff is not None else page
                return "State changes: " + renderer(g, initial_state(g, target))
        if action.kind == "stop":
            return "State changes: " + STOP_EFFECT
        return "State changes: " + (eff.canonical_change_description if eff is not None else NO_EFFECT)

    def _judge(self, req: CompletionRequest) -> str:
        user = req.messages[1].text
        intent_m, url_m = _INTENT.search(user), _LINE_URL.search(user)
        task, goal = self.find_task(intent_m.group(1)) if intent_m else (None, None)
        g, root = self.locate(url_m.group(1)) if url_m else (None, None)
        if goal is None or g is None:
            return _verdict("I cannot tell.", False, False)
        direct = _DIRECT.search(user)
        if direct:
            action = parse_action_line(direct.group(1))
            if action.kind == "stop":
                seen = content_words(user.split("Current observation:", 1)[1])
                hit = bool(action.answer) and content_words(action.answer) <= seen
                return _verdict("The answer is on the page." if hit else "Stopping looks premature.", hit, False)
            label = self._element_text(g, root, action.elem) if action.elem is not None else ""
            related = overlap(task.instruction, label + " " + (action.text or "")) > 0
            return _verdict("Judging from the element text only.", False, related)
        actions = [parse_action_line(s) for s in _STEP_ACTION.findall(user)]
        if not actions:
            # no simulated steps: judge the current page against the task's start page
            if root == goal.target_page:
                return _verdict("The current page is the goal page.", True, True)
            closer = self._page_distance(g, root, goal) < self._page_distance(g, task.start_page, goal)
            return _verdict("Comparing the current page with the start page.", False, closer)
        moves = [a for a in actions if a.kind != "stop"]
        end = self._follow(g, root, moves)
        if actions and actions[-1].kind == "stop":
            ok = (goal.target_page in (None, end)) and goal.answer_matches(actions[-1].answer)
            return _verdict("The trajectory stops here.", ok, False)
        if end == goal.target_page and root != goal.target_page:
            return _verdict("The predicted page is the goal page.", True, True)
        closer = self._page_distance(g, end, goal) < self._page_distance(g, root, goal)
        return _verdict("Comparing distance to the goal page.", False, closer)


def _verdict(thought: str, success: bool, on_track: bool) -> str:
    return (
        f"Thoughts: {thought}\n"
        f"Status: \"{'success' if success else 'failure'}\"\n"
        f"On the right track to success: \"{'yes' if on_track or success else 'no'}\""
    )
