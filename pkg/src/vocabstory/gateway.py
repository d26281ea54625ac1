"""Chat-completion access: live HTTP backend plus record/replay support.

The live backend speaks the de-facto standard JSON chat shape
(``{model, messages, temperature, max_tokens}`` in,
``choices[0].message.content`` out).  A scripted backend replays a
transcript keyed by request fingerprint, which makes every pipeline test
deterministic and offline.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol

import httpx

from .errors import BackendUnavailable, ResponseTruncated, SinkWriteFailure, TranscriptMiss

DEFAULT_TEMPERATURE = 0.0
DEFAULT_MAX_TOKENS = 4096


@dataclass(frozen=True)
class ChatMessage:
    role: str  # system | user | assistant
    content: str


@dataclass(frozen=True)
class ChatRequest:
    messages: tuple[ChatMessage, ...]
    temperature: float = DEFAULT_TEMPERATURE
    max_tokens: int = DEFAULT_MAX_TOKENS
    model_name: str = "default"

    def __post_init__(self):
        if not self.messages:
            raise ValueError("messages must be non-empty")
        if self.messages[-1].role != "user":
            raise ValueError("last message must have role 'user'")

    def fingerprint(self) -> str:
        payload = {
            "messages": [[m.role, m.content] for m in self.messages],
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }
        blob = json.dumps(payload, sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def to_wire(self) -> dict:
        return {
            "model": self.model_name,
            "messages": [{"role": m.role, "content": m.content} for m in self.messages],
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }


def user_request(content: str, **kwargs) -> ChatRequest:
    return ChatRequest(messages=(ChatMessage("user", content),), **kwargs)


class Backend(Protocol):
    def complete(self, request: ChatRequest) -> str: ...


@dataclass
class CallLogEntry:
    fingerprint: str
    request: ChatRequest
    reply: str


class Gateway:
    """Thin wrapper that appends every exchange to a run log."""

    def __init__(self, backend: Backend):
        self.backend = backend
        self.call_log: list[CallLogEntry] = []

    def complete(self, request: ChatRequest) -> str:
        reply = self.backend.complete(request)
        self.call_log.append(CallLogEntry(request.fingerprint(), request, reply))
        return reply


@dataclass
class HttpBackend:
    """Live chat-completion endpoint with retry and exponential backoff."""

    endpoint_url: str
    api_token: str | None = None
    max_retries: int = 3
    timeout_seconds: float = 120.0
    backoff_base_seconds: float = 1.0
    _sleep: Callable[[float], None] = field(default=time.sleep, repr=False)

    def complete(self, request: ChatRequest) -> str:
        headers = {"Content-Type": "application/json"}
        if self.api_token:
            headers["Authorization"] = f"Bearer {self.api_token}"
        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                self._sleep(self.backoff_base_seconds * 2 ** (attempt - 1))
            try:
                resp = httpx.post(
                    self.endpoint_url,
                    json=request.to_wire(),
                    headers=headers,
                    timeout=self.timeout_seconds,
                )
                if resp.status_code >= 500:
                    last_error = BackendUnavailable(f"server error {resp.status_code}")
                    continue
                resp.raise_for_status()
                data = resp.json()
                choice = data["choices"][0]
                if choice.get("finish_reason") == "length":
                    raise ResponseTruncated("reply hit the max_tokens limit")
                return choice["message"]["content"]
            except ResponseTruncated:
                raise
            except (httpx.TransportError, httpx.TimeoutException) as exc:
                last_error = exc
        raise BackendUnavailable(f"retries exhausted: {last_error}")


class ScriptedBackend:
    """Replays canned replies keyed by request fingerprint."""

    def __init__(self, transcript: dict[str, str]):
        self.transcript = dict(transcript)

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedBackend":
        transcript: dict[str, str] = {}
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            entry = json.loads(line)
            transcript[entry["fingerprint"]] = entry["reply"]
        return cls(transcript)

    def complete(self, request: ChatRequest) -> str:
        fp = request.fingerprint()
        if fp not in self.transcript:
            raise TranscriptMiss(f"no transcript entry for fingerprint {fp}")
        return self.transcript[fp]


class CallableBackend:
    """Adapter for test doubles: any request -> reply function."""

    def __init__(self, fn: Callable[[ChatRequest], str]):
        self.fn = fn

    def complete(self, request: ChatRequest) -> str:
        return self.fn(request)


class RecordingBackend:
    """Wraps another backend and appends every exchange to a transcript file."""

    def __init__(self, inner: Backend, sink: str | Path):
        self.inner = inner
        self.sink = Path(sink)
        try:
            with open(self.sink, "a", encoding="utf-8"):
                pass
        except OSError as exc:
            raise SinkWriteFailure(f"cannot open transcript sink {self.sink}: {exc}") from exc

    def complete(self, request: ChatRequest) -> str:
        reply = self.inner.complete(request)
        entry = {
            "fingerprint": request.fingerprint(),
            "request": request.to_wire(),
            "reply": reply,
        }
        try:
            with open(self.sink, "a", encoding="utf-8") as f:
                f.write(json.dumps(entry, ensure_ascii=False) + "\n")
        except OSError as exc:
            raise SinkWriteFailure(f"cannot append to {self.sink}: {exc}") from exc
        return reply


def record(backend: Backend, sink: str | Path) -> RecordingBackend:
    return RecordingBackend(backend, sink)
