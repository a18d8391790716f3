"""Chat-provider abstraction, retry/budget policy and deterministic mocks.

Every remote call in the package goes through this module: chat completion
via :class:`Gateway`, and the JSON helpers :func:`http_post_json` /
:func:`http_get_json` used by the embedding and literature clients.
"""

from __future__ import annotations

import itertools
import json
import logging
import math
import os
import threading
import time
import urllib.error
import urllib.parse
import urllib.request
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Protocol, Sequence

logger = logging.getLogger(__name__)

ROLES = ("system", "user", "assistant")

# Per-role temperatures used when callers do not pass one.
DEFAULT_TEMPERATURE = {
    "researcher": 0.8,
    "mentor": 0.3,
    "judge": 0.0,
    "extractor": 0.0,
    "merger": 0.0,
}


class LLMError(Exception):
    pass


class TransportError(LLMError):
    """A remote call failed after all retries."""

    def __init__(self, message: str, attempts: int = 1, retryable: bool = True):
        super().__init__(message)
        self.attempts = attempts
        self.retryable = retryable


class TransientFailure(LLMError):
    """Raised by a provider for an error worth retrying."""


class BudgetError(LLMError):
    pass


class ScriptExhausted(LLMError):
    pass


class RateLimited(LLMError):
    pass


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str


@dataclass
class ChatRequest:
    messages: list[ChatMessage]
    temperature: float = 0.0
    max_output: int = 2048
    tag: str = ""

    def __post_init__(self) -> None:
        self.messages = [m if isinstance(m, ChatMessage) else ChatMessage(*m) for m in self.messages]
        if not self.messages:
            raise ValueError("a chat request needs at least one message")
        if self.messages[0].role not in ("system", "user"):
            raise ValueError("first message must be a system or user message")
        for m in self.messages:
            if m.role not in ROLES:
                raise ValueError(f"bad role {m.role!r}")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")

    @property
    def prompt(self) -> str:
        """All message text joined, handy for policy mocks that route on content."""
        return "\n\n".join(m.content for m in self.messages)

    def to_dict(self) -> dict:
        return {
            "tag": self.tag,
            "temperature": self.temperature,
            "max_output": self.max_output,
            "messages": [asdict(m) for m in self.messages],
        }


@dataclass
class ProviderProfile:
    name: str = "default"
    endpoint: str | None = None
    model: str = "mock"
    timeout: float = 120.0
    retries: int = 3
    rate_limit: float | None = None  # requests per minute
    context_budget: int = 64_000
    max_output: int = 4096
    api_key_env: str | None = None
    backoff: float = 1.0
    block_on_rate_limit: bool = True

    def __post_init__(self) -> None:
        if self.retries < 0:
            raise ValueError("retries must be >= 0")
        if self.context_budget <= self.max_output:
            raise ValueError("context budget must exceed max_output")


def estimate_tokens(text: str) -> int:
    """chars / 4 with a 10% safety margin."""
    return math.ceil(len(text) / 4 * 1.1)


def request_tokens(req: ChatRequest) -> int:
    return sum(estimate_tokens(m.content) + 4 for m in req.messages)


class ChatProvider(Protocol):
    def send(self, request: ChatRequest, profile: ProviderProfile) -> str: ...


class TokenBucket:
    def __init__(self, per_minute: float, clock=time.monotonic, sleep=time.sleep):
        self.rate = per_minute / 60.0
        self.capacity = max(1.0, per_minute / 60.0)
        self.tokens = self.capacity
        self.clock = clock
        self.sleep = sleep
        self.updated = clock()
        self._lock = threading.Lock()

    def acquire(self, block: bool = True) -> None:
        with self._lock:
            while True:
                now = self.clock()
                self.tokens = min(self.capacity, self.tokens + (now - self.updated) * self.rate)
                self.updated = now
                if self.tokens >= 1:
                    self.tokens -= 1
                    return
                if not block:
                    raise RateLimited("rate limit reached")
                self.sleep((1 - self.tokens) / self.rate)


class Gateway:
    """Retrying, budget-checking, logging front end over one provider."""

    def __init__(
        self,
        provider: ChatProvider,
        profile: ProviderProfile | None = None,
        *,
        log_path: str | Path | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.provider = provider
        self.profile = profile or ProviderProfile()
        self.log: list[dict] = []
        self.log_path = Path(log_path) if log_path else None
        self._sleep = sleep
        self._seq = itertools.count(1)
        self._lock = threading.Lock()
        self._bucket = TokenBucket(self.profile.rate_limit, sleep=sleep) if self.profile.rate_limit else None

    def complete(self, request: ChatRequest) -> str:
        return complete(request, self.profile, self.provider, gateway=self)

    def _record(self, entry: dict) -> None:
        with self._lock:
            entry = {"seq": next(self._seq), **entry}
            self.log.append(entry)
            if self.log_path is not None:
                self.log_path.parent.mkdir(parents=True, exist_ok=True)
                with open(self.log_path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(entry, ensure_ascii=False, sort_keys=True) + "\n")


def complete(
    request: ChatRequest,
    profile: ProviderProfile,
    provider: ChatProvider,
    *,
    gateway: Gateway | None = None,
) -> str:
    """Send ``request`` with retries; raises BudgetError before any call if it cannot fit."""
    need = request_tokens(request) + min(request.max_output, profile.max_output)
    if need > profile.context_budget:
        raise BudgetError(f"request needs ~{need} tokens, budget is {profile.context_budget}")
    sleep = gateway._sleep if gateway else time.sleep
    attempts = profile.retries + 1
    last: Exception | None = None
    for attempt in range(1, attempts + 1):
        if gateway is not None and gateway._bucket is not None:
            gateway._bucket.acquire(block=profile.block_on_rate_limit)
        try:
            text = provider.send(request, profile)
        except (TransientFailure, TransportError, OSError, TimeoutError) as exc:
            last = exc
            if gateway is not None:
                gateway._record({"tag": request.tag, "attempt": attempt, "request": request.to_dict(), "error": str(exc)})
            logger.warning("%s attempt %d/%d failed: %s", request.tag or "llm", attempt, attempts, exc)
            if isinstance(exc, TransportError) and not exc.retryable:
                break
            if attempt < attempts:
                sleep(profile.backoff * 2 ** (attempt - 1))
            continue
        if gateway is not None:
            gateway._record({"tag": request.tag, "attempt": attempt, "request": request.to_dict(), "response": text})
        return text
    raise TransportError(f"{request.tag or 'llm'}: gave up after {attempt} attempt(s): {last}", attempts=attempt)


# -- mocks ---------------------------------------------------------------

FAIL = TransientFailure("scripted failure")


class ScriptedProvider:
    """Replays canned replies in order and records every request.

    Script items are reply strings or exception instances (raised when
    reached); :data:`FAIL` is a ready-made transient failure marker.
    """

    def __init__(self, script: Sequence[str | BaseException]):
        if not script:
            raise ValueError("script must be non-empty")
        self.script = list(script)
        self.requests: list[ChatRequest] = []
        self._pos = 0
        self._lock = threading.Lock()

    @property
    def calls(self) -> int:
        return len(self.requests)

    @property
    def remaining(self) -> int:
        return len(self.script) - self._pos

    def send(self, request: ChatRequest, profile: ProviderProfile | None = None) -> str:
        with self._lock:
            self.requests.append(request)
            if self._pos >= len(self.script):
                raise ScriptExhausted(f"script exhausted after {len(self.script)} replies")
            item = self.script[self._pos]
            self._pos += 1
        if isinstance(item, BaseException):
            raise item
        return item


def scripted_mock(script: Sequence[str | BaseException]) -> ScriptedProvider:
    return ScriptedProvider(script)


class FunctionProvider:
    """Provider whose reply is computed from the request by a pure function."""

    def __init__(self, fn: Callable[[ChatRequest], str]):
        self.fn = fn
        self.requests: list[ChatRequest] = []
        self._lock = threading.Lock()

    @property
    def calls(self) -> int:
        return len(self.requests)

    def send(self, request: ChatRequest, profile: ProviderProfile | None = None) -> str:
        with self._lock:
            self.requests.append(request)
        return self.fn(request)


class CountingProvider:
    """Wraps another provider and counts calls that reach it."""

    def __init__(self, inner: ChatProvider):
        self.inner = inner
        self.calls = 0

    def send(self, request: ChatRequest, profile: ProviderProfile) -> str:
        self.calls += 1
        return self.inner.send(request, profile)


def mock_gateway(provider_or_script, **profile_kw) -> Gateway:
    """Gateway around a mock with zero backoff, for tests and demos."""
    if isinstance(provider_or_script, (list, tuple)):
        provider = ScriptedProvider(provider_or_script)
    elif callable(provider_or_script) and not hasattr(provider_or_script, "send"):
        provider = FunctionProvider(provider_or_script)
    else:
        provider = provider_or_script
    profile_kw.setdefault("backoff", 0.0)
    return Gateway(provider, ProviderProfile(**profile_kw), sleep=lambda s: None)


# -- HTTP transport --------------------------------------------------------


def _headers(api_key_env: str | None) -> dict[str, str]:
    headers = {"Content-Type": "application/json", "Accept": "application/json"}
    if api_key_env:
        key = os.environ.get(api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
    return headers


def _open(req: urllib.request.Request, timeout: float) -> Any:
    try:
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            return json.loads(resp.read().decode("utf-8"))
    except urllib.error.HTTPError as exc:
        retryable = exc.code == 429 or exc.code >= 500
        raise TransportError(f"HTTP {exc.code} from {req.full_url}", retryable=retryable) from exc
    except (urllib.error.URLError, TimeoutError, ConnectionError) as exc:
        raise TransportError(f"cannot reach {req.full_url}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise TransportError(f"non-JSON response from {req.full_url}", retryable=False) from exc


def http_post_json(url: str, body: dict, *, timeout: float = 60.0, api_key_env: str | None = None) -> Any:
    data = json.dumps(body).encode("utf-8")
    req = urllib.request.Request(url, data=data, headers=_headers(api_key_env), method="POST")
    return _open(req, timeout)


def http_get_json(
    url: str, params: dict | None = None, *, timeout: float = 60.0, api_key_env: str | None = None,
    key_header: str | None = None,
) -> Any:
    if params:
        url = url + ("&" if "?" in url else "?") + urllib.parse.urlencode(params)
    headers = _headers(None if key_header else api_key_env)
    if key_header and api_key_env and os.environ.get(api_key_env):
        headers[key_header] = os.environ[api_key_env]
    req = urllib.request.Request(url, headers=headers, method="GET")
    return _open(req, timeout)


class HTTPChatProvider:
    """POSTs ``{model, messages, temperature, max_tokens}`` to the profile endpoint.

    Accepts either ``{"text": ...}`` or an OpenAI-style ``choices`` response.
    """

    def send(self, request: ChatRequest, profile: ProviderProfile) -> str:
        if not profile.endpoint:
            raise TransportError(f"profile {profile.name!r} has no endpoint", retryable=False)
        body = {
            "model": profile.model,
            "messages": [asdict(m) for m in request.messages],
            "temperature": request.temperature,
            "max_tokens": min(request.max_output, profile.max_output),
        }
        data = http_post_json(profile.endpoint, body, timeout=profile.timeout, api_key_env=profile.api_key_env)
        if isinstance(data, dict):
            if isinstance(data.get("text"), str):
                return data["text"]
            try:
                return data["choices"][0]["message"]["content"]
            except (KeyError, IndexError, TypeError):
                pass
        raise TransportError("unrecognised chat response shape", retryable=False)

