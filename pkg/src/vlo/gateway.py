"""Uniform chat-completion client: rate limiting, retries, token counting.

The wire format is the OpenAI-compatible chat-completions JSON; any backend
implementing `Backend.complete` can be plugged in (HTTP, scripted mocks,
stub models). The rate limiter is a single shared token bucket per Gateway,
matching a one-account upstream quota.
"""

from __future__ import annotations

import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Protocol

import httpx
import jsonschema

from .errors import ConfigError, MalformedResponseError, TransportError

#: Hard ceiling on max_tokens for any single call.
MAX_API_TOKEN_LIMIT = 60_000

DEFAULT_API_KEY_ENV = "OPENROUTER_API_KEY"


@dataclass(frozen=True)
class ChatRequest:
    model_id: str
    system: str
    user: str
    temperature: float = 0.5
    top_p: float = 1.0
    max_tokens: int = 4096
    response_schema: dict | None = None
    # Sideband for deterministic offline backends; never sent over the wire.
    metadata: dict | None = None

    def validate(self) -> None:
        if not 0.0 <= self.temperature <= 2.0:
            raise ConfigError(f"temperature must be in [0, 2], got {self.temperature}")
        if not 0.0 < self.top_p <= 1.0:
            raise ConfigError(f"top_p must be in (0, 1], got {self.top_p}")
        if not 0 < self.max_tokens <= MAX_API_TOKEN_LIMIT:
            raise ConfigError(
                f"max_tokens must be in (0, {MAX_API_TOKEN_LIMIT}], got {self.max_tokens}"
            )

    def payload(self) -> dict:
        messages = []
        if self.system:
            messages.append({"role": "system", "content": self.system})
        messages.append({"role": "user", "content": self.user})
        return {
            "model": self.model_id,
            "messages": messages,
            "temperature": self.temperature,
            "top_p": self.top_p,
            "max_tokens": self.max_tokens,
        }


@dataclass
class GatewayConfig:
    base_url: str = "https://openrouter.ai/api/v1"
    api_key: str | None = None
    max_requests_per_second: float = 900.0
    retry_initial_delay: float = 0.25
    max_retries: int = 5
    request_timeout: float = 120.0

    @classmethod
    def from_env(cls, env_var: str = DEFAULT_API_KEY_ENV, **kwargs) -> "GatewayConfig":
        return cls(api_key=os.environ.get(env_var), **kwargs)

    def validate(self) -> None:
        if self.max_requests_per_second <= 0:
            raise ConfigError("max_requests_per_second must be positive")
        if self.retry_initial_delay <= 0:
            raise ConfigError("retry_initial_delay must be positive")
        if self.max_retries < 0:
            raise ConfigError("max_retries must be >= 0")


# --- token counting ----------------------------------------------------------


def _heuristic_count(text: str) -> int:
    """Documented approximation of byte-pair token counts for English prose:
    a blend of chars/4 and words*4/3. Zero only on empty input."""
    if not text:
        return 0
    words = len(text.split())
    chars = len(text)
    return max(1, round(0.5 * chars / 4 + 0.5 * words * 4 / 3))


class BytePairCounter:
    """Exact greedy BPE over whitespace-split words, given a merges table.

    The merges file holds one merge per line ("lo w" means symbols 'lo' and
    'w' fuse), highest priority first; words start as character symbols.
    """

    def __init__(self, merges: list[tuple[str, str]]):
        self.ranks = {pair: i for i, pair in enumerate(merges)}

    @classmethod
    def from_file(cls, path: str) -> "BytePairCounter":
        merges = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                left, right = line.split(" ")
                merges.append((left, right))
        return cls(merges)

    def encode_word(self, word: str) -> list[str]:
        symbols = list(word)
        while len(symbols) > 1:
            pairs = [(symbols[i], symbols[i + 1]) for i in range(len(symbols) - 1)]
            ranked = [(self.ranks[p], i) for i, p in enumerate(pairs) if p in self.ranks]
            if not ranked:
                break
            _, at = min(ranked)
            symbols[at : at + 2] = [symbols[at] + symbols[at + 1]]
        return symbols

    def count(self, text: str) -> int:
        return sum(len(self.encode_word(w)) for w in text.split())


@dataclass(frozen=True)
class TokenCounter:
    encoding_id: str
    count_fn: Callable[[str], int]

    def count(self, text: str) -> int:
        return self.count_fn(text)


def heuristic_counter() -> TokenCounter:
    return TokenCounter("heuristic-v1", _heuristic_count)


def bpe_counter(merges_path: str) -> TokenCounter:
    return TokenCounter(f"bpe:{os.path.basename(merges_path)}", BytePairCounter.from_file(merges_path).count)


def count_tokens(text: str, tc: TokenCounter | None = None) -> int:
    return (tc or heuristic_counter()).count(text)


# --- rate limiting -----------------------------------------------------------


class RateLimiter:
    """Token bucket shared across threads; clock and sleep are injectable."""

    def __init__(
        self,
        rate_per_second: float,
        bucket_size: float | None = None,
        *,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if rate_per_second <= 0:
            raise ConfigError("rate_per_second must be positive")
        self.rate = rate_per_second
        self.bucket_size = bucket_size if bucket_size is not None else max(1.0, rate_per_second)
        self._clock = clock
        self._sleep = sleep
        self._tokens = self.bucket_size
        self._last = clock()
        self._lock = threading.Lock()

    def set_rate(self, rate_per_second: float) -> None:
        """Runtime adjustment hook; the adaptation policy is the caller's."""
        if rate_per_second <= 0:
            raise ConfigError("rate_per_second must be positive")
        with self._lock:
            self.rate = rate_per_second

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self._clock()
                self._tokens = min(self.bucket_size, self._tokens + (now - self._last) * self.rate)
                self._last = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self.rate
            self._sleep(wait)


# --- backends ----------------------------------------------------------------


class TransientBackendError(TransportError):
    """Retryable failure: HTTP 429/5xx, timeouts, connection resets."""


class Backend(Protocol):
    def complete(self, payload: dict, metadata: dict | None) -> dict:
        """Return the chat-completions response JSON or raise a transport error."""
        ...


class HttpBackend:
    """POST /chat/completions against an OpenAI-dialect endpoint."""

    def __init__(self, cfg: GatewayConfig):
        if not cfg.api_key:
            raise ConfigError(
                f"API key missing: set {DEFAULT_API_KEY_ENV} or GatewayConfig.api_key"
            )
        self._client = httpx.Client(
            base_url=cfg.base_url,
            headers={"Authorization": f"Bearer {cfg.api_key}"},
            timeout=cfg.request_timeout,
        )

    def complete(self, payload: dict, metadata: dict | None) -> dict:
        try:
            resp = self._client.post("/chat/completions", json=payload)
        except (httpx.TimeoutException, httpx.TransportError) as exc:
            raise TransientBackendError(str(exc)) from exc
        if resp.status_code == 429 or resp.status_code >= 500:
            raise TransientBackendError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        if resp.status_code >= 400:
            raise TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        return resp.json()


# --- JSON extraction ---------------------------------------------------------

_FENCE_RE = re.compile(r"```(?:json)?\s*(.*?)```", re.DOTALL)


def extract_json_block(text: str):
    """Best-effort JSON payload from an assistant message: raw, fenced, or the
    first balanced object. Raises MalformedResponseError when none parses."""
    candidates = [text.strip()]
    fence = _FENCE_RE.search(text)
    if fence:
        candidates.append(fence.group(1).strip())
    start = text.find("{")
    if start != -1:
        depth = 0
        for i in range(start, len(text)):
            if text[i] == "{":
                depth += 1
            elif text[i] == "}":
                depth -= 1
                if depth == 0:
                    candidates.append(text[start : i + 1])
                    break
    for candidate in candidates:
        try:
            return json.loads(candidate)
        except (json.JSONDecodeError, ValueError):
            continue
    raise MalformedResponseError(f"no JSON payload in response: {text[:120]!r}")


# --- the gateway -------------------------------------------------------------


@dataclass
class CallStats:
    requests: int = 0
    retries: int = 0
    prompt_tokens: int = 0
    completion_tokens: int = 0


class Gateway:
    """Thread-safe chat client: one shared rate limiter, exponential backoff."""

    def __init__(
        self,
        cfg: GatewayConfig,
        backend: Backend | None = None,
        *,
        counter: TokenCounter | None = None,
        sleep: Callable[[float], None] = time.sleep,
        limiter: RateLimiter | None = None,
    ):
        cfg.validate()
        self.cfg = cfg
        self.backend = backend if backend is not None else HttpBackend(cfg)
        self.counter = counter or heuristic_counter()
        self._sleep = sleep
        self.limiter = limiter or RateLimiter(cfg.max_requests_per_second)
        self.stats = CallStats()
        self._stats_lock = threading.Lock()

    def chat(self, req: ChatRequest) -> str:
        """Assistant text for `req`. Transient failures back off geometrically
        from retry_initial_delay; schema-constrained replies are re-requested
        on validation failure within the same retry budget."""
        req.validate()
        payload = req.payload()
        attempts = self.cfg.max_retries + 1
        last_error: Exception | None = None
        for attempt in range(attempts):
            self.limiter.acquire()
            with self._stats_lock:
                self.stats.requests += 1
                if attempt:
                    self.stats.retries += 1
            try:
                response = self.backend.complete(payload, req.metadata)
            except TransientBackendError as exc:
                last_error = exc
                if attempt + 1 < attempts:
                    self._sleep(self.cfg.retry_initial_delay * 2**attempt)
                continue
            content = self._content_of(response)
            with self._stats_lock:
                self.stats.prompt_tokens += self.counter.count(req.system) + self.counter.count(req.user)
                self.stats.completion_tokens += self.counter.count(content)
            if req.response_schema is not None:
                try:
                    parsed = extract_json_block(content)
                    jsonschema.validate(parsed, req.response_schema)
                except (MalformedResponseError, jsonschema.ValidationError) as exc:
                    last_error = MalformedResponseError(str(exc))
                    if attempt + 1 < attempts:
                        self._sleep(self.cfg.retry_initial_delay * 2**attempt)
                    continue
            return content
        if isinstance(last_error, MalformedResponseError):
            raise last_error
        raise TransportError(f"retries exhausted after {attempts} attempts: {last_error}")

    @staticmethod
    def _content_of(response: dict) -> str:
        try:
            return response["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise MalformedResponseError(f"response missing message content: {response!r}") from exc


def chat(req: ChatRequest, cfg: GatewayConfig, backend: Backend | None = None) -> str:
    """One-shot convenience wrapper around a throwaway Gateway."""
    return Gateway(cfg, backend).chat(req)
