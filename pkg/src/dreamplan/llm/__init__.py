"""Prompt templates, request builders, the completion gateway and an offline scripted model."""
from .gateway import (
    CacheMiss,
    CompletionRequest,
    Gateway,
    HTTPTransport,
    Message,
    TranscriptCache,
    TransientTransportError,
    TransportError,
)
from .prompts import LLMConfig
from .scripted import ScriptedSiteModel
from .templates import MissingSlot, PromptTemplate, load_template, render_template

__all__ = [name for name in dir() if not name.startswith("_")]
