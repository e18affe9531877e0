"""Crude content-word matching used by the offline stand-ins for model judgement."""
import re

STOPWORDS = frozenset("""
a an the of to in on for and or is are be me my i you your it its this that what which how
much many does do did with from at by as tell find show open give go get up off all
""".split())

_WORD = re.compile(r"[a-z0-9]+")


def _stem(w: str) -> str:
    if len(w) > 3 and w.endswith("s") and not w.endswith("ss"):
        return w[:-1]
    return w


def content_words(text: str) -> set[str]:
    return {_stem(w) for w in _WORD.findall(text.lower()) if w not in STOPWORDS}


def overlap(a: str, b: str) -> int:
    return len(content_words(a) & content_words(b))
