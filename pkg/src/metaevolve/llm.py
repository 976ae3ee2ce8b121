"""Chat-completions transport plus a deterministic scripted stand-in.

Only this module may touch the network.  Everything else (the meta loop, the
tests) talks to a client object exposing ``complete(request) -> response``;
the scripted client makes the whole system runnable offline.

The wire shape is the widely implemented chat-completions JSON: POST a body
of ``{model, messages, temperature, max_tokens}`` and read
``choices[0].message.content``.  The endpoint is configurable; the credential
comes from the ``METAEVOLVE_LLM_KEY`` environment variable and is never
logged or echoed in errors.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field

import requests

API_KEY_ENV = "METAEVOLVE_LLM_KEY"

DEFAULT_TIMEOUT_S = 120.0
DEFAULT_BACKOFF_S = (1.0, 2.0, 4.0)


class LlmError(RuntimeError):
    pass


class TransportError(LlmError):
    """Network failure or retriable HTTP status, after exhausting retries."""


class CredentialError(LlmError):
    """HTTP 401/403: wrong or missing API key.  Not retried."""


class ProtocolError(LlmError):
    """The endpoint answered, but not with a chat-completions body."""


@dataclass
class LlmRequest:
    model: str
    system_message: str
    user_message: str
    temperature: float = 0.7
    max_tokens: int = 2048

    def __post_init__(self) -> None:
        if not self.system_message or not self.user_message:
            raise ValueError("system and user messages must be non-empty")
        if not (0.0 <= self.temperature <= 2.0):
            raise ValueError("temperature must lie in [0, 2]")


@dataclass
class LlmResponse:
    text: str
    prompt_tokens: int | None = None
    completion_tokens: int | None = None
    latency_ms: int = 0


class HttpLlmClient:
    """One chat-completions endpoint with retry/backoff.

    Retries transport errors and HTTP 429/5xx up to ``max_retries`` times with
    exponential backoff; credential and protocol errors surface immediately.
    """

    def __init__(
        self,
        endpoint: str,
        model: str = "",
        api_key: str | None = None,
        temperature: float = 0.7,
        max_tokens: int = 2048,
        timeout_s: float = DEFAULT_TIMEOUT_S,
        backoff_s: tuple[float, ...] = DEFAULT_BACKOFF_S,
        sleep=time.sleep,
        session: requests.Session | None = None,
    ):
        self.endpoint = endpoint
        self.model = model
        self.temperature = temperature
        self.max_tokens = max_tokens
        self._api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")
        self._timeout_s = timeout_s
        self._backoff_s = backoff_s
        self._sleep = sleep
        self._session = session or requests.Session()

    def complete(self, request: LlmRequest) -> LlmResponse:
        payload = {
            "model": request.model,
            "messages": [
                {"role": "system", "content": request.system_message},
                {"role": "user", "content": request.user_message},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        headers = {"Content-Type": "application/json"}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"

        start = time.perf_counter()
        attempts = len(self._backoff_s) + 1
        last_failure = "no attempt made"
        for attempt in range(attempts):
            if attempt:
                self._sleep(self._backoff_s[attempt - 1])
            try:
                resp = self._session.post(
                    self.endpoint, json=payload, headers=headers, timeout=self._timeout_s
                )
            except requests.RequestException as exc:
                last_failure = f"transport failure: {exc.__class__.__name__}"
                continue
            if resp.status_code in (401, 403):
                raise CredentialError(
                    f"endpoint rejected the credential (HTTP {resp.status_code}); "
                    f"check the {API_KEY_ENV} environment variable"
                )
            if resp.status_code == 429 or resp.status_code >= 500:
                last_failure = f"HTTP {resp.status_code}"
                continue
            if resp.status_code != 200:
                raise ProtocolError(f"unexpected HTTP {resp.status_code}: {resp.text[:200]}")
            return self._parse_body(resp, start)
        raise TransportError(f"request failed after {attempts} attempts; last error: {last_failure}")

    def _parse_body(self, resp, start: float) -> LlmResponse:
        try:
            body = resp.json()
            text = body["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError):
            raise ProtocolError(
                f"malformed chat-completions body: {resp.text[:200]!r}"
            ) from None
        usage = body.get("usage") or {}
        return LlmResponse(
            text=text,
            prompt_tokens=usage.get("prompt_tokens"),
            completion_tokens=usage.get("completion_tokens"),
            latency_ms=int((time.perf_counter() - start) * 1000),
        )


@dataclass
class ScriptedLlmClient:
    """Replays fixture responses in order, cycling at exhaustion.

    Never touches the network; records every request for assertions.
    """

    fixtures: list[str]
    model: str = "scripted"
    temperature: float = 0.0
    max_tokens: int = 2048
    requests: list[LlmRequest] = field(default_factory=list)
    _calls: int = 0

    def __post_init__(self) -> None:
        if not self.fixtures:
            raise ValueError("scripted client needs at least one fixture")

    def complete(self, request: LlmRequest) -> LlmResponse:
        self.requests.append(request)
        text = self.fixtures[self._calls % len(self.fixtures)]
        self._calls += 1
        return LlmResponse(text=text, latency_ms=0)
