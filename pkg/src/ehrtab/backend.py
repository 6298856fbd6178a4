"""Chat-completion backends: real HTTP endpoints, a scripted mock, record/replay.

Every model call in the benchmark goes through complete(), so swapping a live
endpoint for a replay cache cannot change anything downstream.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import requests

log = logging.getLogger("ehrtab.backend")

DEFAULT_TEMPERATURE = 0.0
DEFAULT_MAX_TOKENS = 1024


class BackendError(Exception):
    pass


class TransportError(BackendError):
    """HTTP-level failure; carries the status code when one was received."""

    def __init__(self, message: str, status: Optional[int] = None):
        super().__init__(message)
        self.status = status


class RequestTimeout(BackendError):
    pass


class CacheMissError(BackendError):
    pass


class MockUnmatchedError(BackendError):
    pass


@dataclass(frozen=True)
class Decoding:
    temperature: float = DEFAULT_TEMPERATURE
    max_tokens: int = DEFAULT_MAX_TOKENS

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be a positive integer")


@dataclass(frozen=True)
class ChatRequest:
    """One single-turn exchange: a system message and a user message."""

    system_text: str
    user_text: str
    model_name: str = "local-model"
    decoding: Decoding = field(default_factory=Decoding)


def canonical_request(request: ChatRequest) -> str:
    """Stable JSON text, injective on every request field."""
    payload = {
        "system_text": request.system_text,
        "user_text": request.user_text,
        "model_name": request.model_name,
        "decoding": {
            "temperature": request.decoding.temperature,
            "max_tokens": request.decoding.max_tokens,
        },
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def cache_key(request: ChatRequest) -> str:
    return hashlib.sha256(canonical_request(request).encode("utf-8")).hexdigest()


def request_digest(request: ChatRequest) -> str:
    joined = request.system_text + "\x00" + request.user_text
    return hashlib.sha256(joined.encode("utf-8")).hexdigest()


class HttpBackend:
    """OpenAI-compatible chat endpoint.

    The credential is named by environment variable, read at call time, and
    never logged.
    """

    def __init__(
        self,
        endpoint: str,
        credential_env: Optional[str] = None,
        timeout_s: float = 60.0,
        max_retries: int = 3,
        max_in_flight: int = 4,
        sleep: Callable[[float], None] = time.sleep,
        session: Optional[requests.Session] = None,
    ):
        self.endpoint = endpoint
        self.credential_env = credential_env
        self.timeout_s = timeout_s
        self.max_retries = max_retries
        self._gate = threading.BoundedSemaphore(max_in_flight)
        self._sleep = sleep
        self._session = session or requests.Session()

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.credential_env:
            secret = os.environ.get(self.credential_env)
            if not secret:
                raise TransportError(f"credential variable {self.credential_env} is not set")
            headers["Authorization"] = f"Bearer {secret}"
        return headers

    def complete(self, request: ChatRequest) -> str:
        payload = {
            "model": request.model_name,
            "messages": [
                {"role": "system", "content": request.system_text},
                {"role": "user", "content": request.user_text},
            ],
            "temperature": request.decoding.temperature,
            "max_tokens": request.decoding.max_tokens,
        }
        last_error: BackendError = TransportError("no attempt made")
        with self._gate:
            for attempt in range(self.max_retries + 1):
                if attempt:
                    self._sleep(0.25 * (2 ** (attempt - 1)))
                try:
                    resp = self._session.post(
                        self.endpoint,
                        json=payload,
                        headers=self._headers(),
                        timeout=self.timeout_s,
                    )
                except requests.Timeout:
                    last_error = RequestTimeout(f"timed out after {self.timeout_s}s")
                    log.warning("request %s timed out (attempt %d)", request_digest(request)[:12], attempt + 1)
                    continue
                except requests.RequestException as exc:
                    last_error = TransportError(f"connection failed: {exc.__class__.__name__}")
                    log.warning("request %s failed transport (attempt %d)", request_digest(request)[:12], attempt + 1)
                    continue
                if resp.status_code >= 500:
                    last_error = TransportError(f"server error {resp.status_code}", status=resp.status_code)
                    log.warning("request %s got status %d (attempt %d)", request_digest(request)[:12], resp.status_code, attempt + 1)
                    continue
                if resp.status_code != 200:
                    raise TransportError(f"endpoint returned {resp.status_code}", status=resp.status_code)
                try:
                    return resp.json()["choices"][0]["message"]["content"]
                except (ValueError, KeyError, IndexError, TypeError):
                    raise TransportError("malformed completion payload", status=resp.status_code) from None
        raise last_error


Matcher = Union[str, Callable[[ChatRequest], bool]]


class MockBackend:
    """Scripted responses; the first matching rule wins.

    A string matcher matches when it occurs in the user text; a callable
    matcher is applied to the whole request.
    """

    def __init__(self, script: list[tuple[Matcher, Union[str, Callable[[ChatRequest], str]]]]):
        self.script = list(script)
        self.call_count = 0
        self.seen: list[ChatRequest] = []

    def complete(self, request: ChatRequest) -> str:
        self.call_count += 1
        self.seen.append(request)
        for matcher, response in self.script:
            if isinstance(matcher, str):
                hit = matcher in request.user_text
            else:
                hit = matcher(request)
            if hit:
                return response(request) if callable(response) else response
        raise MockUnmatchedError(f"no script rule matched request {request_digest(request)[:12]}")


class ReplayBackend:
    """Line-delimited JSON cache keyed by the canonical request hash.

    With a fallback backend, misses delegate and the reply is recorded; with
    fallback None the backend is strict and a miss is an error.
    """

    def __init__(self, cache_path: str, fallback=None):
        self.cache_path = cache_path
        self.fallback = fallback
        self._lock = threading.Lock()
        self._cache: dict[str, str] = {}
        self._load()

    def _load(self) -> None:
        if not os.path.exists(self.cache_path):
            return
        with open(self.cache_path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                self._cache[record["key"]] = record["response_text"]

    def _store(self, key: str, request: ChatRequest, text: str) -> None:
        record = {"key": key, "request_digest": request_digest(request), "response_text": text}
        with self._lock:
            self._cache[key] = text
            with open(self.cache_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, sort_keys=True) + "\n")
                fh.flush()
                os.fsync(fh.fileno())

    def complete(self, request: ChatRequest) -> str:
        key = cache_key(request)
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        if self.fallback is None:
            raise CacheMissError(f"no cached response for {key[:12]} and no fallback")
        text = self.fallback.complete(request)
        self._store(key, request, text)
        return text


Backend = Union[HttpBackend, MockBackend, ReplayBackend]


def complete(backend: Backend, request: ChatRequest) -> str:
    """Run one completion; raw model text comes back untouched."""
    return backend.complete(request)
