"""Gateway to external bot services, plus in-process reference bots.

Wire contract: ``POST {base_url}/respond`` with a JSON request body carrying
the full transcript, topic data, and merged parameters; the service answers
``{"text": ..., "meta": {...}}``. Bots are stateless per request, so the
platform can restart without losing bot-side sessions.
"""

from __future__ import annotations

import logging
import random
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping
from urllib.parse import urlparse

import httpx

from .errors import BotError, BotUnavailable, DuplicateName, EmptyScript, MalformedUrl

logger = logging.getLogger(__name__)

BACKOFF_BASE_SECONDS = 1.0
BACKOFF_FACTOR = 2.0


@dataclass(frozen=True)
class BotEndpointSpec:
    name: str
    base_url: str
    timeout: float = 30.0
    max_retries: int = 2
    default_params: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class TranscriptEntry:
    author_role: str  # "human" | "bot" | "seed"
    speaker_label: str
    text: str
    is_seed: bool

    def to_wire(self) -> dict:
        return {
            "author_role": self.author_role,
            "speaker_label": self.speaker_label,
            "text": self.text,
            "is_seed": self.is_seed,
        }


@dataclass(frozen=True)
class BotTurnRequest:
    thread_id: str
    transcript: tuple[TranscriptEntry, ...]
    topic_data: Mapping[str, Any] = field(default_factory=dict)
    params: Mapping[str, Any] = field(default_factory=dict)

    def to_wire(self) -> dict:
        return {
            "thread_id": self.thread_id,
            "transcript": [entry.to_wire() for entry in self.transcript],
            "topic_data": dict(self.topic_data),
            "params": dict(self.params),
        }

    @classmethod
    def from_wire(cls, body: Mapping[str, Any]) -> "BotTurnRequest":
        return cls(
            thread_id=str(body.get("thread_id", "")),
            transcript=tuple(
                TranscriptEntry(
                    author_role=str(e["author_role"]),
                    speaker_label=str(e["speaker_label"]),
                    text=str(e["text"]),
                    is_seed=bool(e["is_seed"]),
                )
                for e in body.get("transcript", [])
            ),
            topic_data=dict(body.get("topic_data", {})),
            params=dict(body.get("params", {})),
        )


@dataclass(frozen=True)
class BotTurnResponse:
    text: str
    meta: Mapping[str, Any] = field(default_factory=dict)

    def to_wire(self) -> dict:
        return {"text": self.text, "meta": dict(self.meta)}


# --------------------------------------------------------------------------
# reference bots (callable: BotTurnRequest -> str)

class EchoBot:
    """Replies with the text of the last transcript entry."""

    def __call__(self, request: BotTurnRequest) -> str:
        if request.transcript:
            return request.transcript[-1].text
        return "hello"


class ScriptedBot:
    """Replies with scripted lines in order, repeating the last one."""

    def __init__(self, script: list[str]):
        if not script:
            raise EmptyScript("a scripted bot needs at least one line")
        self._script = list(script)
        self._calls = 0
        self._lock = threading.Lock()

    def __call__(self, request: BotTurnRequest) -> str:
        with self._lock:
            index = min(self._calls, len(self._script) - 1)
            self._calls += 1
        return self._script[index]


def scripted_bot(script: list[str]) -> ScriptedBot:
    return ScriptedBot(script)


# --------------------------------------------------------------------------
# gateway

# A transport performs one wire attempt. It either returns the decoded
# response body (a mapping) or raises _AttemptFailure.
Transport = Callable[[BotTurnRequest, "BotEndpointSpec"], Mapping[str, Any]]


class _AttemptFailure(Exception):
    def __init__(self, kind: str, message: str, status_code: int | None = None):
        super().__init__(message)
        self.kind = kind
        self.status_code = status_code


@dataclass
class _Registered:
    spec: BotEndpointSpec
    transport: Transport


def _http_transport(client: httpx.Client) -> Transport:
    def attempt(request: BotTurnRequest, spec: BotEndpointSpec) -> Mapping[str, Any]:
        url = spec.base_url.rstrip("/") + "/respond"
        try:
            response = client.post(url, json=request.to_wire(), timeout=spec.timeout)
        except httpx.TimeoutException as err:
            raise _AttemptFailure("timeout", f"request to {url} timed out") from err
        except httpx.HTTPError as err:
            raise _AttemptFailure("connect", f"request to {url} failed: {err}") from err
        if response.status_code // 100 != 2:
            raise _AttemptFailure("bad_status", f"{url} returned HTTP {response.status_code}",
                                  status_code=response.status_code)
        try:
            body = response.json()
        except ValueError as err:
            raise _AttemptFailure("malformed_body", f"{url} returned non-JSON body") from err
        if not isinstance(body, Mapping):
            raise _AttemptFailure("malformed_body", f"{url} returned a non-object body")
        return body

    return attempt


def _local_transport(bot: Callable[[BotTurnRequest], str]) -> Transport:
    def attempt(request: BotTurnRequest, spec: BotEndpointSpec) -> Mapping[str, Any]:
        try:
            text = bot(request)
        except _AttemptFailure:
            raise
        except Exception as err:  # a misbehaving local bot is a bad endpoint, not a crash
            raise _AttemptFailure("connect", f"local bot {spec.name!r} raised: {err}") from err
        return {"text": text, "meta": {}}

    return attempt


class BotGateway:
    """Endpoint registry plus the retrying request path.

    ``sleeper`` and ``rng`` are injectable so tests never really wait.
    """

    def __init__(self, *, client: httpx.Client | None = None,
                 sleeper: Callable[[float], None] = time.sleep,
                 rng: random.Random | None = None):
        self._client = client or httpx.Client()
        self._sleeper = sleeper
        self._rng = rng or random.Random()
        self._endpoints: dict[str, _Registered] = {}
        self._lock = threading.Lock()

    def register_endpoint(self, spec: BotEndpointSpec) -> None:
        parsed = urlparse(spec.base_url)
        if parsed.scheme not in ("http", "https") or not parsed.netloc:
            raise MalformedUrl(f"bot base_url is not a valid http(s) URL: {spec.base_url!r}")
        self._register(_Registered(spec, _http_transport(self._client)))

    def register_local(self, name: str, bot: Callable[[BotTurnRequest], str], *,
                       max_retries: int = 2,
                       default_params: Mapping[str, Any] | None = None) -> None:
        """Register an in-process reference bot under the same contract."""
        spec = BotEndpointSpec(name=name, base_url=f"local://{name}",
                               max_retries=max_retries,
                               default_params=dict(default_params or {}))
        self._register(_Registered(spec, _local_transport(bot)))

    def register_transport(self, spec: BotEndpointSpec, transport: Transport) -> None:
        """Hook for tests: any callable can stand in for the wire."""
        self._register(_Registered(spec, transport))

    def _register(self, entry: _Registered) -> None:
        with self._lock:
            if entry.spec.name in self._endpoints:
                raise DuplicateName(f"bot endpoint {entry.spec.name!r} is already registered")
            self._endpoints[entry.spec.name] = entry

    def is_registered(self, name: str) -> bool:
        with self._lock:
            return name in self._endpoints

    def spec(self, name: str) -> BotEndpointSpec:
        with self._lock:
            entry = self._endpoints.get(name)
        if entry is None:
            raise BotUnavailable(f"no bot endpoint registered under {name!r}")
        return entry.spec

    def request_turn(self, name: str, request: BotTurnRequest) -> BotTurnResponse:
        """One bot turn with retries: at most ``max_retries + 1`` wire attempts,
        exponential backoff with full jitter between them."""
        with self._lock:
            entry = self._endpoints.get(name)
        if entry is None:
            raise BotUnavailable(f"no bot endpoint registered under {name!r}")
        spec = entry.spec

        # Endpoint defaults underlie per-thread params; the thread wins.
        merged = dict(spec.default_params)
        merged.update(request.params)
        outgoing = BotTurnRequest(
            thread_id=request.thread_id,
            transcript=request.transcript,
            topic_data=request.topic_data,
            params=merged,
        )

        attempts = spec.max_retries + 1
        failure: _AttemptFailure | None = None
        for attempt_index in range(attempts):
            if attempt_index:
                delay = self._rng.uniform(0.0, BACKOFF_BASE_SECONDS * BACKOFF_FACTOR ** (attempt_index - 1))
                self._sleeper(delay)
            try:
                body = entry.transport(outgoing, spec)
            except _AttemptFailure as err:
                failure = err
                logger.warning("bot %s attempt %d/%d failed (%s): %s",
                               name, attempt_index + 1, attempts, err.kind, err)
                continue
            text = body.get("text")
            if not isinstance(text, str) or not text.strip():
                failure = _AttemptFailure("malformed_body", f"bot {name!r} returned empty or missing text")
                logger.warning("bot %s attempt %d/%d failed (malformed_body): empty text",
                               name, attempt_index + 1, attempts)
                continue
            meta = body.get("meta") or {}
            if not isinstance(meta, Mapping):
                meta = {}
            return BotTurnResponse(text=text, meta=dict(meta))

        assert failure is not None
        raise BotError(failure.kind, f"bot {name!r} failed after {attempts} attempt(s): {failure}",
                       status_code=failure.status_code, attempts=attempts)

    def close(self) -> None:
        self._client.close()
