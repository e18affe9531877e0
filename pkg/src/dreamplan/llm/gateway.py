"""Chat-completion gateway with retries, a request-hash transcript cache and record/replay."""
from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional, Protocol, Sequence, Union

log = logging.getLogger(__name__)

MODES = ("live", "record", "replay")


@dataclass(frozen=True)
class Message:
    role: str
    text: str
    image_refs: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "image_refs", tuple(self.image_refs))


@dataclass(frozen=True)
class CompletionRequest:
    messages: tuple[Message, ...]
    temperature: float = 0.0
    n_samples: int = 1
    max_tokens: int = 1024
    model_name: str = "gpt-4o"

    def __post_init__(self):
        object.__setattr__(self, "messages", tuple(self.messages))
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")

    def to_json(self) -> dict:
        d = asdict(self)
        d["messages"] = [
            {"role": m.role, "text": m.text, "image_refs": list(m.image_refs)} for m in self.messages
        ]
        return d

    @classmethod
    def from_json(cls, d: dict) -> "CompletionRequest":
        msgs = tuple(Message(m["role"], m["text"], tuple(m.get("image_refs", ()))) for m in d["messages"])
        return cls(msgs, d["temperature"], d["n_samples"], d["max_tokens"], d["model_name"])

    def key(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"), ensure_ascii=False)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    @property
    def text(self) -> str:
        return "\n\n".join(m.text for m in self.messages)


class TransportError(Exception):
    pass


class TransientTransportError(TransportError):
    """A failure worth retrying (timeouts, 429, 5xx)."""


class CacheMiss(KeyError):
    pass


class Transport(Protocol):
    def __call__(self, request: CompletionRequest) -> list[str]: ...


class TranscriptCache:
    """Append-only JSONL store of ``{"key", "request", "completions"}`` records."""

    def __init__(self, path: Optional[Union[str, Path]] = None):
        self.path = Path(path) if path is not None else None
        self._entries: dict[str, list[str]] = {}
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            with self.path.open(encoding="utf-8") as fh:
                for lineno, line in enumerate(fh, 1):
                    if not line.strip():
                        continue
                    try:
                        rec = json.loads(line)
                    except json.JSONDecodeError as exc:
                        raise ValueError(f"{self.path}:{lineno}: bad transcript record") from exc
                    self._entries[rec["key"]] = list(rec["completions"])

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key: str) -> bool:
        return key in self._entries

    def get(self, key: str) -> Optional[list[str]]:
        hit = self._entries.get(key)
        return list(hit) if hit is not None else None

    def put(self, request: CompletionRequest, completions: Sequence[str]) -> None:
        key = request.key()
        rec = {"key": key, "request": request.to_json(), "completions": list(completions)}
        with self._lock:
            self._entries[key] = list(completions)
            if self.path is not None:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")


class Gateway:
    """Routes completion requests to a transport and/or a transcript cache.

    live    call the transport; append to the transcript if one is configured
    record  serve cache hits, otherwise call the transport and append
    replay  serve from the transcript only; never touches the transport
    """

    def __init__(
        self,
        transport: Optional[Transport] = None,
        mode: str = "live",
        cache: Optional[TranscriptCache] = None,
        max_retries: int = 3,
        backoff_base: float = 0.5,
        backoff_cap: float = 8.0,
        max_in_flight: int = 8,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if mode != "replay" and transport is None:
            raise ValueError(f"{mode} mode needs a transport")
        if mode == "replay" and cache is None:
            raise ValueError("replay mode needs a transcript cache")
        self.transport = transport
        self.mode = mode
        self.cache = cache
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self.backoff_cap = backoff_cap
        self._sleep = sleep
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self.calls = 0

    def complete(self, req: CompletionRequest) -> list[str]:
        key = req.key()
        if self.mode in ("replay", "record") and self.cache is not None:
            hit = self.cache.get(key)
            if hit is not None:
                return hit
            if self.mode == "replay":
                raise CacheMiss(key)
        with self._slots:
            out = self._call_with_retries(req)
        if len(out) != req.n_samples:
            raise TransportError(f"expected {req.n_samples} completions, got {len(out)}")
        if self.cache is not None:
            self.cache.put(req, out)
        return out

    def _call_with_retries(self, req: CompletionRequest) -> list[str]:
        attempt = 0
        while True:
            try:
                self.calls += 1
                return self._call(req)
            except TransientTransportError as exc:
                if attempt >= self.max_retries:
                    raise TransportError(f"giving up after {attempt + 1} attempts: {exc}") from exc
                delay = min(self.backoff_cap, self.backoff_base * 2 ** attempt)
                log.warning("transient transport failure (%s); retrying in %.2fs", exc, delay)
                self._sleep(delay)
                attempt += 1

    def _call(self, req: CompletionRequest) -> list[str]:
        if getattr(self.transport, "supports_n", True) or req.n_samples == 1:
            return list(self.transport(req))
        single = CompletionRequest(req.messages, req.temperature, 1, req.max_tokens, req.model_name)
        out = []
        for _ in range(req.n_samples):
            out.extend(self.transport(single))
        return out


@dataclass
class HTTPTransport:
    """OpenAI-compatible ``/chat/completions`` client.

    Endpoint and key come from ``DREAMPLAN_BASE_URL`` / ``OPENAI_BASE_URL`` and
    ``DREAMPLAN_API_KEY`` / ``OPENAI_API_KEY`` unless given explicitly.
    """

    base_url: Optional[str] = None
    api_key: Optional[str] = None
    timeout: float = 60.0
    supports_n: bool = True
    client: object = field(default=None, repr=False)

    def __post_init__(self):
        import httpx

        self.base_url = (self.base_url or os.getenv("DREAMPLAN_BASE_URL")
                         or os.getenv("OPENAI_BASE_URL") or "https://api.openai.com/v1").rstrip("/")
        self.api_key = self.api_key or os.getenv("DREAMPLAN_API_KEY") or os.getenv("OPENAI_API_KEY")
        if not self.api_key:
            raise TransportError("no API key: set DREAMPLAN_API_KEY or OPENAI_API_KEY")
        if self.client is None:
            self.client = httpx.Client(timeout=self.timeout)

    @staticmethod
    def payload(req: CompletionRequest) -> dict:
        messages = []
        for m in req.messages:
            if m.image_refs:
                content = [{"type": "text", "text": m.text}]
                content += [{"type": "image_url", "image_url": {"url": ref}} for ref in m.image_refs]
            else:
                content = m.text
            messages.append({"role": m.role, "content": content})
        return {
            "model": req.model_name,
            "messages": messages,
            "temperature": req.temperature,
            "n": req.n_samples,
            "max_tokens": req.max_tokens,
        }

    def __call__(self, req: CompletionRequest) -> list[str]:
        import httpx

        try:
            resp = self.client.post(
                f"{self.base_url}/chat/completions",
                json=self.payload(req),
                headers={"Authorization": f"Bearer {self.api_key}"},
            )
        except httpx.TransportError as exc:
            raise TransientTransportError(str(exc)) from exc
        if resp.status_code == 429 or resp.status_code >= 500:
            raise TransientTransportError(f"HTTP {resp.status_code}")
        if resp.status_code >= 400:
            raise TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        body = resp.json()
        return [c["message"]["content"] or "" for c in body["choices"]]
