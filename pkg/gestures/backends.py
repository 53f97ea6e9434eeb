"""Chat backends the intent chain talks to.

``RemoteEndpointBackend`` posts to any chat-completion HTTP API.
``ScriptedBackend`` replays recorded transcripts stored as
``<request digest>.json`` files, which makes chain runs reproducible.
``RecordingBackend`` wraps another backend and writes those files.
"""

from __future__ import annotations

import hashlib
import json
import logging
import threading
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

import requests
from django.conf import settings

from .exceptions import BackendError, BackendTimeout

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str


@dataclass(frozen=True)
class ChatRequest:
    """One chat-completion request.

    ``stage`` names the chain step for logs and tests; it is not sent and
    takes no part in the digest.
    """

    messages: tuple[ChatMessage, ...]
    model: str
    temperature: float = 0.0
    stage: str = field(default="", compare=False)

    def payload(self) -> dict[str, Any]:
        return {
            "model": self.model,
            "messages": [{"role": m.role, "content": m.content} for m in self.messages],
            "temperature": self.temperature,
        }

    def digest(self) -> str:
        """SHA-256 over the exact wire payload."""
        canonical = json.dumps(
            self.payload(), sort_keys=True, ensure_ascii=False, separators=(",", ":")
        )
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class ChatResponse:
    content: str
    prompt_tokens: int = 0
    completion_tokens: int = 0
    latency_seconds: float = 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "content": self.content,
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
            "latency_seconds": self.latency_seconds,
        }


@dataclass(frozen=True)
class BackendCapabilities:
    """Model name and declared per-token prices, kept as exact fractions."""

    model: str
    input_price: Fraction = Fraction(0)
    output_price: Fraction = Fraction(0)
    currency: str = "USD"

    @classmethod
    def from_settings(cls, **overrides: Any) -> BackendCapabilities:
        values: dict[str, Any] = {
            "model": settings.SARGES_MODEL,
            "input_price": Fraction(settings.SARGES_PRICE_IN),
            "output_price": Fraction(settings.SARGES_PRICE_OUT),
            "currency": settings.SARGES_CURRENCY,
        }
        values.update({key: value for key, value in overrides.items() if value is not None})
        values["input_price"] = Fraction(values["input_price"])
        values["output_price"] = Fraction(values["output_price"])
        return cls(**values)

    def cost(self, prompt_tokens: int, completion_tokens: int) -> Fraction:
        return prompt_tokens * self.input_price + completion_tokens * self.output_price


class ChatBackend(ABC):
    """Abstract chat backend. Implementations must allow concurrent ``send``."""

    def __init__(self, capabilities: BackendCapabilities) -> None:
        self.capabilities = capabilities

    @abstractmethod
    def send(self, request: ChatRequest, timeout: float | None = None) -> ChatResponse:
        raise NotImplementedError


class RemoteEndpointBackend(ChatBackend):
    """Posts the chat-completion wire format to an HTTP endpoint."""

    def __init__(
        self,
        endpoint: str,
        api_key: str,
        capabilities: BackendCapabilities,
    ) -> None:
        super().__init__(capabilities)
        self.endpoint = endpoint
        self.api_key = api_key

    def send(self, request: ChatRequest, timeout: float | None = None) -> ChatResponse:
        headers = {
            "Content-Type": "application/json",
            "Authorization": f"Bearer {self.api_key}",
        }
        logger.info("Calling %s with model %s (stage %s)", self.endpoint, request.model, request.stage)
        started = time.perf_counter()
        try:
            resp = requests.post(self.endpoint, json=request.payload(), headers=headers, timeout=timeout)
        except requests.Timeout as exc:
            raise BackendTimeout(f"no reply from {self.endpoint} within {timeout}s") from exc
        except requests.RequestException as exc:
            raise BackendError(f"request to {self.endpoint} failed: {exc}") from exc
        latency = time.perf_counter() - started

        if resp.status_code >= 400:
            raise BackendError(
                f"{self.endpoint} answered {resp.status_code}: {resp.text[:200]}",
                status=resp.status_code,
            )
        try:
            body = resp.json()
            content = body["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendError(
                f"{self.endpoint} returned an unexpected body", status=resp.status_code
            ) from exc

        usage = body.get("usage") or {}
        return ChatResponse(
            content=content or "",
            prompt_tokens=int(usage.get("prompt_tokens", 0)),
            completion_tokens=int(usage.get("completion_tokens", 0)),
            latency_seconds=latency,
        )


def transcript_path(directory: Path, request: ChatRequest) -> Path:
    return directory / f"{request.digest()}.json"


def write_transcript(directory: Path, request: ChatRequest, response: ChatResponse) -> Path:
    """Store one exchange so a ``ScriptedBackend`` can replay it."""
    directory.mkdir(parents=True, exist_ok=True)
    path = transcript_path(directory, request)
    document = {"request": request.payload(), "response": response.to_dict()}
    path.write_text(json.dumps(document, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    return path


class ScriptedBackend(ChatBackend):
    """Replays transcripts keyed by the digest of the exact request.

    Recorded token counts and latencies are replayed as well. Fixtures are
    regenerated whenever prompts change.
    """

    def __init__(self, directory: str | Path, capabilities: BackendCapabilities) -> None:
        super().__init__(capabilities)
        self.directory = Path(directory)
        self._lock = threading.Lock()
        self._cache: dict[str, ChatResponse] = {}

    def send(self, request: ChatRequest, timeout: float | None = None) -> ChatResponse:
        digest = request.digest()
        with self._lock:
            if digest not in self._cache:
                self._cache[digest] = self._load(digest, request)
            response = self._cache[digest]
        logger.debug("Replayed %s transcript %s", request.stage or "request", digest[:12])
        return response

    def _load(self, digest: str, request: ChatRequest) -> ChatResponse:
        path = self.directory / f"{digest}.json"
        try:
            document = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise BackendError(
                f"no transcript for {request.stage or 'request'} {digest[:12]} in {self.directory}"
            ) from None
        except json.JSONDecodeError as exc:
            raise BackendError(f"transcript {path.name} is not valid JSON: {exc}") from exc
        reply = document.get("response", {})
        return ChatResponse(
            content=reply.get("content", ""),
            prompt_tokens=int(reply.get("prompt_tokens", 0)),
            completion_tokens=int(reply.get("completion_tokens", 0)),
            latency_seconds=float(reply.get("latency_seconds", 0.0)),
        )


class RecordingBackend(ChatBackend):
    """Forwards to ``inner`` and writes every exchange as a transcript file."""

    def __init__(self, inner: ChatBackend, directory: str | Path) -> None:
        super().__init__(inner.capabilities)
        self.inner = inner
        self.directory = Path(directory)
        self._lock = threading.Lock()

    def send(self, request: ChatRequest, timeout: float | None = None) -> ChatResponse:
        response = self.inner.send(request, timeout)
        with self._lock:
            path = transcript_path(self.directory, request)
            if path.exists():
                try:
                    recorded = json.loads(path.read_text(encoding="utf-8")).get("response", {})
                except json.JSONDecodeError as exc:
                    raise BackendError(f"transcript {path.name} is not valid JSON: {exc}") from exc
                if recorded.get("content") != response.content:
                    raise BackendError(
                        f"{request.stage or 'request'} {path.stem[:12]} already recorded with a different reply"
                    )
            write_transcript(self.directory, request, response)
        return response
