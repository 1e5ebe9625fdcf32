"""Chat-completion access: a scripted replay backend and a live HTTP backend."""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol

import httpx

from .tokens import TruncationPolicy, estimate_tokens, truncate_output  # noqa: F401  (re-exported)

ROLES = ("consultant", "programmer", "reviewer")
ENV_API_BASE = "SCIAGENT_API_BASE"
ENV_API_KEY = "SCIAGENT_API_KEY"


class GatewayError(RuntimeError):
    pass


class Transport(GatewayError):
    pass


class RateLimited(GatewayError):
    def __init__(self, message: str, retry_after: float | None = None):
        super().__init__(message)
        self.retry_after = retry_after


class BadResponse(GatewayError):
    pass


class BudgetExceeded(GatewayError):
    pass


class FixtureExhausted(GatewayError):
    pass


@dataclass(frozen=True)
class ModelDescriptor:
    backend: str = "scripted"
    model: str = "scripted"
    temperature: float = 0.0
    max_output_tokens: int = 8192

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")

    def as_dict(self) -> dict:
        return {"backend": self.backend, "model": self.model, "temperature": self.temperature,
                "max_output_tokens": self.max_output_tokens}


@dataclass(frozen=True)
class RoleAssignment:
    consultant: ModelDescriptor
    programmer: ModelDescriptor
    reviewer: ModelDescriptor

    @classmethod
    def uniform(cls, model: ModelDescriptor) -> "RoleAssignment":
        return cls(model, model, model)

    @classmethod
    def from_dict(cls, data: dict) -> "RoleAssignment":
        missing = [r for r in ROLES if r not in data]
        if missing:
            raise ValueError(f"roles without a model: {', '.join(missing)}")
        return cls(**{r: ModelDescriptor(**data[r]) for r in ROLES})

    def for_role(self, role: str) -> ModelDescriptor:
        return getattr(self, role)

    def as_dict(self) -> dict:
        return {r: self.for_role(r).as_dict() for r in ROLES}


@dataclass(frozen=True)
class CompletionRequest:
    role: str
    prompt: str
    model: ModelDescriptor
    sample: int = 0


@dataclass
class CompletionResponse:
    text: str
    finish_reason: str = "stop"
    usage: dict = field(default_factory=dict)
    latency: float = 0.0
    retry_count: int = 0


class Backend(Protocol):
    def complete(self, request: CompletionRequest) -> CompletionResponse: ...


class ScriptedBackend:
    """Replays ``{role, text, sample?}`` records in file order.

    Each sample keeps its own cursor per role.  Records without a ``sample``
    key are visible to every sample, so one fixture can drive a campaign.
    """

    def __init__(self, records: list[dict]):
        for k, rec in enumerate(records):
            if rec.get("role") not in ROLES or not isinstance(rec.get("text"), str):
                raise ValueError(f"fixture record {k} needs a role in {ROLES} and a text")
        self.records = records
        self._cursors: dict[tuple[int, str], int] = {}
        self._lock = threading.Lock()

    @classmethod
    def from_jsonl(cls, path: str | Path) -> "ScriptedBackend":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls([json.loads(ln) for ln in lines if ln.strip()])

    def _queue(self, sample: int, role: str) -> list[str]:
        return [r["text"] for r in self.records
                if r["role"] == role and r.get("sample", sample) == sample]

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        key = (request.sample, request.role)
        with self._lock:
            queue = self._queue(*key)
            k = self._cursors.get(key, 0)
            if k >= len(queue):
                raise FixtureExhausted(f"no scripted {request.role} reply left for sample {request.sample}")
            self._cursors[key] = k + 1
        text = queue[k]
        return CompletionResponse(text, usage={"prompt_tokens": estimate_tokens(request.prompt),
                                               "completion_tokens": estimate_tokens(text)})


class RateLimiter:
    """Spaces consecutive calls at least ``min_interval`` seconds apart."""

    def __init__(self, min_interval: float = 0.0, clock=time.monotonic, sleep=time.sleep):
        self.min_interval = min_interval
        self._clock, self._sleep = clock, sleep
        self._next = 0.0
        self._lock = threading.Lock()

    def wait(self) -> None:
        if self.min_interval <= 0:
            return
        with self._lock:
            now = self._clock()
            delay = self._next - now
            self._next = max(now, self._next) + self.min_interval
        if delay > 0:
            self._sleep(delay)


def _retry_after(resp: httpx.Response) -> float | None:
    raw = resp.headers.get("retry-after")
    try:
        return float(raw) if raw is not None else None
    except ValueError:
        return None


class LiveBackend:
    """OpenAI-style ``/chat/completions`` endpoint over HTTP."""

    def __init__(self, base_url: str | None = None, api_key: str | None = None, *,
                 max_retries: int = 3, backoff: float = 1.0, timeout: float = 600.0,
                 client: httpx.Client | None = None, sleep: Callable[[float], None] = time.sleep,
                 min_interval: float = 0.0):
        self.base_url = (base_url or os.environ.get(ENV_API_BASE, "")).rstrip("/")
        if not self.base_url:
            raise ValueError(f"live backend needs a base URL (set {ENV_API_BASE})")
        self.api_key = api_key if api_key is not None else os.environ.get(ENV_API_KEY, "")
        self.max_retries = max_retries
        self.backoff = backoff
        self.client = client or httpx.Client(timeout=timeout)
        self.sleep = sleep
        self.limiter = RateLimiter(min_interval, sleep=sleep)

    def _payload(self, request: CompletionRequest) -> dict:
        return {
            "model": request.model.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.model.temperature,
            "max_tokens": request.model.max_output_tokens,
        }

    def _parse(self, resp: httpx.Response) -> tuple[str, str, dict]:
        try:
            body = resp.json()
            choice = body["choices"][0]
            text = choice["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BadResponse(f"malformed completion payload: {exc}") from exc
        if not isinstance(text, str) or not text.strip():
            raise BadResponse("empty completion text")
        return text, choice.get("finish_reason") or "stop", body.get("usage") or {}

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        url = f"{self.base_url}/chat/completions"
        t0 = time.monotonic()
        retries = 0
        while True:
            self.limiter.wait()
            wait: float | None = None
            try:
                resp = self.client.post(url, json=self._payload(request), headers=headers)
            except httpx.TransportError as exc:
                failure: GatewayError = Transport(f"{type(exc).__name__}: {exc}")
            else:
                if resp.status_code == 200:
                    text, finish, usage = self._parse(resp)
                    return CompletionResponse(text, finish, usage, time.monotonic() - t0, retries)
                if resp.status_code == 429:
                    wait = _retry_after(resp)
                    failure = RateLimited(f"HTTP 429 from {url}", wait)
                elif resp.status_code >= 500:
                    failure = Transport(f"HTTP {resp.status_code} from {url}")
                else:
                    raise BadResponse(f"HTTP {resp.status_code} from {url}: {resp.text[:500]}")
            if retries >= self.max_retries:
                raise failure
            self.sleep(wait if wait is not None else self.backoff * 2**retries)
            retries += 1


class Gateway:
    """Routes requests to named backends after the prompt budget check."""

    def __init__(self, backends: dict[str, Backend], policy: TruncationPolicy = TruncationPolicy()):
        self.backends = backends
        self.policy = policy

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        tokens = estimate_tokens(request.prompt)
        if tokens > self.policy.prompt_budget:
            raise BudgetExceeded(f"{request.role} prompt is ~{tokens} tokens, budget {self.policy.prompt_budget}")
        backend = self.backends.get(request.model.backend)
        if backend is None:
            raise GatewayError(f"no backend named {request.model.backend!r}")
        resp = backend.complete(request)
        if not resp.text:
            raise BadResponse("empty completion text")
        return resp
