"""Whole-page renderings used as alternative simulated-state representations."""
from html import escape

from .graph import SiteGraph
from .simulator import EnvState, observe

_HTML_TAGS = {"link": "a", "button": "button", "textbox": "input", "searchbox": "input", "StaticText": "p"}


def render_html(graph: SiteGraph, state: EnvState) -> str:
    obs = observe(graph, state)
    title = graph.pages[state.page].title
    body = []
    for el in obs.elements:
        tag = _HTML_TAGS.get(el.tag_type, "div")
        ident = f' id="{el.id}"' if el.id is not None else ""
        if tag == "input":
            body.append(f'<input{ident} placeholder="{escape(el.text_content)}">')
        else:
            body.append(f"<{tag}{ident}>{escape(el.text_content)}</{tag}>")
    return f"<html><head><title>{escape(title)}</title></head><body>{''.join(body)}</body></html>"


def render_accessibility_tree(graph: SiteGraph, state: EnvState) -> str:
    obs = observe(graph, state)
    title = graph.pages[state.page].title
    lines = [f"RootWebArea '{title}'"]
    for el in obs.elements:
        ident = f"[{el.id}] " if el.id is not None else ""
        lines.append(f"\t{ident}{el.tag_type} '{el.text_content}'")
    return "\n".join(lines)


RENDERERS = {"full_html": render_html, "accessibility_tree": render_accessibility_tree}
