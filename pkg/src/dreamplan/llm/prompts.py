"""Builds the chat requests for the four planning stages.

The request layouts here are also what :mod:`dreamplan.llm.scripted` parses, so
labels such as ``Current URL:`` are part of the offline contract.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from ..core import Action, Observation, StateChange, TaskInstance, render_observation, render_tabs
from .gateway import CompletionRequest, Message
from .templates import load_template, render_template

REPRESENTATION_HINTS = {
    "change_description": "",
    "full_html": "Describe the resulting page by writing its complete HTML after 'State changes:'.",
    "accessibility_tree": (
        "Describe the resulting page by writing its complete accessibility tree after 'State changes:', "
        "one element per line in the [id][tagType][text content] format."
    ),
}


@dataclass(frozen=True)
class LLMConfig:
    model_name: str = "gpt-4o"
    max_tokens: int = 1024
    proposal_temperature: float = 1.0
    world_model_temperature: float = 0.7
    judge_temperature: float = 0.0
    refine_temperature: float = 0.0


def describe_action(a: Action, obs: Optional[Observation] = None) -> str:
    text = a.render()
    if obs is not None and a.elem is not None:
        el = obs.element(a.elem)
        if el is not None:
            text += f" ({el.tag_type} '{el.text_content}')"
    return text


def render_history(history: Sequence[Action]) -> str:
    return "; ".join(a.render() for a in history) if history else "None"


def render_changes(changes: Sequence[StateChange]) -> str:
    lines = []
    for c in changes:
        lines.append(f"Step {c.step_index} action: {c.producing_action.render()}")
        lines.append(f"State changes: {c.description}")
    return "\n".join(lines)


def proposal_request(task: TaskInstance, obs: Observation, n: int, cfg: LLMConfig,
                     predicted: Sequence[StateChange] = (), temperature: Optional[float] = None) -> CompletionRequest:
    info = render_observation(obs)
    if predicted:
        info += "\n\nPredicted state changes so far:\n" + "\n".join(
            f"{i}. {c.description}" for i, c in enumerate(predicted, 1))
    previous = obs.previous_action
    if predicted:
        previous = predicted[-1].producing_action
    body = render_template(load_template("action_proposal"), {
        "Web Information": info,
        "Task Objective": task.instruction,
        "Web Page Screenshot Image": obs.image_ref or "(no screenshot)",
        "Web URL": obs.url,
        "Previous Tabs": render_tabs(obs.open_tabs),
        "Previous Action": previous.render() if previous else "None",
    })
    refs = tuple(task.instruction_image_refs) + ((obs.image_ref,) if obs.image_ref else ())
    return CompletionRequest(
        (Message("user", body, refs),),
        temperature=cfg.proposal_temperature if temperature is None else temperature,
        n_samples=n, max_tokens=cfg.max_tokens, model_name=cfg.model_name,
    )


def refinement_request(task: TaskInstance, obs: Observation, history: Sequence[Action],
                       candidates: Sequence[Action], cfg: LLMConfig,
                       screenshots: Sequence[str] = ()) -> CompletionRequest:
    shots = list(screenshots) or ([obs.image_ref] if obs.image_ref else [])
    listing = "\n" + "\n".join(f"{i}: {describe_action(a, obs)}" for i, a in enumerate(candidates))
    body = render_template(load_template("self_refinement"), {
        "last_actions_str": render_history(history),
        "current_url": obs.url,
        "len(intent_images)": str(len(task.instruction_image_refs)),
        "len(screenshots)": str(len(shots)),
        "action_descriptions": listing,
    })
    text = body + f"\n\nUser Intent: {task.instruction}"
    refs = tuple(task.instruction_image_refs) + tuple(shots)
    return CompletionRequest((Message("user", text, refs),), temperature=cfg.refine_temperature,
                             n_samples=1, max_tokens=cfg.max_tokens, model_name=cfg.model_name)


def world_model_request(obs: Observation, prior: Sequence[StateChange], action: Action,
                        cfg: LLMConfig, representation: str = "change_description") -> CompletionRequest:
    system = render_template(load_template("world_model"), {"Action": describe_action(action, obs)})
    context = [f"URL: {obs.url}", "Initial observation:", render_observation(obs)]
    if prior:
        context += ["", "Simulated steps so far:", render_changes(prior)]
    hint = REPRESENTATION_HINTS[representation]
    if hint:
        context += ["", hint]
    refs = (obs.image_ref,) if obs.image_ref else ()
    return CompletionRequest(
        (Message("system", system), Message("user", "\n".join(context), refs)),
        temperature=cfg.world_model_temperature, n_samples=1,
        max_tokens=cfg.max_tokens, model_name=cfg.model_name,
    )


def judge_request(task: TaskInstance, history: Sequence[Action], obs: Observation,
                  cfg: LLMConfig, changes: Sequence[StateChange] = (),
                  direct_action: Optional[Action] = None, trailing_action: Optional[Action] = None,
                  screenshots: Sequence[str] = (), n: int = 1) -> CompletionRequest:
    system = render_template(load_template("reward_model"), {})
    context = [
        f"User Intent: {task.instruction}",
        f"Action History: {render_history(history)}",
        f"Current URL: {obs.url}",
        "Current observation:",
        render_observation(obs),
        "",
    ]
    if direct_action is not None:
        context.append(f"Proposed next action: {describe_action(direct_action, obs)}")
    else:
        context += ["Simulated steps:", render_changes(changes)]
        # an imagined stop ends the trajectory without a state change of its own
        if trailing_action is not None:
            context.append(f"Step {len(changes) + 1} action: {trailing_action.render()}")
    refs = tuple(task.instruction_image_refs) + tuple(screenshots)
    return CompletionRequest(
        (Message("system", system), Message("user", "\n".join(context), refs)),
        temperature=cfg.judge_temperature, n_samples=n,
        max_tokens=cfg.max_tokens, model_name=cfg.model_name,
    )
