"""LLM providers: a remote chat-completions client and a fixture-backed mock."""

from __future__ import annotations

import hashlib
import logging
import os
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol

import httpx
from tenacity import RetryError, Retrying, retry_if_exception_type, stop_after_attempt, wait_random_exponential

from ..errors import AuthError, ProviderError, ProviderExhausted

logger = logging.getLogger(__name__)

DEFAULT_TEMPERATURE = 0.5
DEFAULT_MAX_TOKENS = 6000


@dataclass(frozen=True)
class LlmRequest:
    model_name: str
    prompt_text: str
    temperature: float = DEFAULT_TEMPERATURE
    max_tokens: int = DEFAULT_MAX_TOKENS
    doc_id: str | None = None
    """Routing hint for fixture-backed providers; never sent over the wire."""

    def __post_init__(self) -> None:
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature must be within [0, 2], got {self.temperature}")
        if self.max_tokens < 1:
            raise ValueError(f"max_tokens must be >= 1, got {self.max_tokens}")

    @property
    def prompt_digest(self) -> str:
        return hashlib.sha256(self.prompt_text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Completion:
    text: str
    truncated: bool = False
    """Set when the provider reports the output was cut at ``max_tokens``."""


class LlmProvider(Protocol):
    def complete(self, request: LlmRequest) -> Completion: ...


def complete(provider: LlmProvider, request: LlmRequest) -> Completion:
    return provider.complete(request)


class MockProvider:
    """Serve canned responses from a directory.

    Lookup order: ``<doc_id>.response.txt``, then
    ``<sha256 of prompt>.response.txt``. A ``<doc_id>.error.txt`` fixture
    makes the call fail with its contents as the message.
    """

    def __init__(self, fixture_dir: str | Path):
        self.fixture_dir = Path(fixture_dir)
        if not self.fixture_dir.is_dir():
            raise ProviderError(f"mock fixture directory not found: {self.fixture_dir}")

    def complete(self, request: LlmRequest) -> Completion:
        if request.doc_id:
            error = self.fixture_dir / f"{request.doc_id}.error.txt"
            if error.is_file():
                raise ProviderError(error.read_text(encoding="utf-8").strip() or "mock provider failure")
        candidates = [request.prompt_digest]
        if request.doc_id:
            candidates.insert(0, request.doc_id)
        for key in candidates:
            path = self.fixture_dir / f"{key}.response.txt"
            if path.is_file():
                return Completion(path.read_text(encoding="utf-8"))
        raise ProviderError(f"no mock response for {' or '.join(candidates)}")


class _Transient(Exception):
    pass


class RemoteProvider:
    """Chat-completions client over HTTP with retry on transient failures.

    The credential is read from the environment variable ``credential_env``
    at construction. With ``auth_header="Authorization"`` it is sent as a
    bearer token; any other header name (e.g. ``api-key``) gets the raw key.
    """

    def __init__(
        self,
        endpoint: str,
        credential_env: str = "LLM_API_KEY",
        *,
        auth_header: str = "Authorization",
        max_attempts: int = 4,
        backoff_base: float = 1.0,
        backoff_max: float = 60.0,
        timeout: float = 120.0,
        client: httpx.Client | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        key = os.environ.get(credential_env, "")
        if not key.strip():
            raise AuthError(f"credential environment variable {credential_env} is not set")
        if max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        self.endpoint = endpoint
        self.credential_env = credential_env
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self.backoff_max = backoff_max
        value = f"Bearer {key}" if auth_header.lower() == "authorization" else key
        self._headers = {auth_header: value, "Content-Type": "application/json"}
        self._client = client or httpx.Client(timeout=timeout)
        self._sleep = sleep

    def __repr__(self) -> str:
        return f"RemoteProvider(endpoint={self.endpoint!r}, credential_env={self.credential_env!r})"

    def close(self) -> None:
        self._client.close()

    def _post_once(self, request: LlmRequest) -> Completion:
        body = {
            "model": request.model_name,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
            "messages": [{"role": "user", "content": request.prompt_text}],
        }
        try:
            response = self._client.post(self.endpoint, json=body, headers=self._headers)
        except httpx.TransportError as exc:
            logger.warning("transport error calling %s: %s", self.endpoint, type(exc).__name__)
            raise _Transient(f"transport error: {type(exc).__name__}") from exc

        status = response.status_code
        if status in (401, 403):
            raise AuthError(f"provider rejected credential (HTTP {status})")
        if status == 429 or status >= 500:
            logger.warning("retryable HTTP %d from %s", status, self.endpoint)
            raise _Transient(f"HTTP {status}")
        if status >= 400:
            raise ProviderError(f"HTTP {status}: {response.text[:200]}")

        try:
            choice = response.json()["choices"][0]
            text = choice["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"unexpected response body: {exc!r}") from None
        if not isinstance(text, str):
            raise ProviderError("response content is not text")
        return Completion(text, truncated=choice.get("finish_reason") == "length")

    def complete(self, request: LlmRequest) -> Completion:
        retrying = Retrying(
            stop=stop_after_attempt(self.max_attempts),
            wait=wait_random_exponential(multiplier=self.backoff_base, max=self.backoff_max),
            retry=retry_if_exception_type(_Transient),
            sleep=self._sleep,
        )
        try:
            return retrying(self._post_once, request)
        except RetryError as exc:
            last = exc.last_attempt.exception()
            raise ProviderExhausted(f"gave up after {self.max_attempts} attempts: {last}") from last
