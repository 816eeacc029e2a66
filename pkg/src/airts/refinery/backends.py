"""Chat-completion and embedding backends: HTTP clients and deterministic mocks."""

from __future__ import annotations

import hashlib
import json
import os
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from functools import lru_cache
from typing import Callable, Protocol, Sequence, TypeVar

import httpx
import numpy as np

from ..errors import ConfigurationError

TEMPERATURE = 0
MAX_RETRIES = 3          # so at most four attempts per item

T = TypeVar("T")
R = TypeVar("R")


class BackendError(RuntimeError):
    """A backend call failed (transport, HTTP status or unusable payload)."""


class RetryExhausted(RuntimeError):
    def __init__(self, attempts: int, last: BaseException):
        super().__init__(f"failed after {attempts} attempts: {last}")
        self.attempts = attempts
        self.last = last


class ChatBackend(Protocol):
    def complete(self, system: str, user: str) -> str: ...


class EmbeddingBackend(Protocol):
    dim: int

    def embed(self, text: str) -> np.ndarray: ...


@dataclass(frozen=True)
class BackendConfig:
    base_url: str = "http://localhost:8000/v1"
    model: str = "default"
    auth_env: str | None = None       # name of the env var holding the bearer token
    timeout: float = 60.0
    max_in_flight: int = 4
    path: str = ""                    # endpoint path; empty picks the kind's default

    def __post_init__(self):
        if self.max_in_flight < 1:
            raise ConfigurationError("max_in_flight must be >= 1")
        if self.timeout <= 0:
            raise ConfigurationError("timeout must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "BackendConfig":
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigurationError(f"unknown backend config keys: {sorted(unknown)}")
        return cls(**d)

    def headers(self) -> dict[str, str]:
        if not self.auth_env:
            return {}
        token = os.environ.get(self.auth_env)
        if not token:
            raise ConfigurationError(f"environment variable {self.auth_env} is not set")
        return {"Authorization": f"Bearer {token}"}


# ------------------------------------------------------------------- retries

def call_with_retries(fn: Callable[[], T], retries: int = MAX_RETRIES, base_delay: float = 0.5,
                      sleep: Callable[[float], None] = time.sleep) -> tuple[T, int]:
    """Run ``fn`` with exponential backoff; returns ``(result, attempts)``."""
    last: BaseException | None = None
    for attempt in range(retries + 1):
        if attempt:
            sleep(base_delay * 2 ** (attempt - 1))
        try:
            return fn(), attempt + 1
        except (BackendError, httpx.HTTPError) as exc:
            last = exc
    raise RetryExhausted(retries + 1, last)


def bounded_map(fn: Callable[[T], R], items: Sequence[T], max_in_flight: int) -> list[R]:
    """``fn`` over ``items`` with at most ``max_in_flight`` concurrent calls, results in input order."""
    if max_in_flight <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------- HTTP

class HttpChatBackend:
    """POST ``{model, messages, temperature: 0}``; the reply is the first choice's content."""

    def __init__(self, config: BackendConfig, transport: httpx.BaseTransport | None = None):
        self.config = config
        self.max_in_flight = config.max_in_flight
        self._client = httpx.Client(base_url=config.base_url, timeout=config.timeout,
                                    headers=config.headers(), transport=transport)

    def complete(self, system: str, user: str) -> str:
        body = {"model": self.config.model, "temperature": TEMPERATURE,
                "messages": [{"role": "system", "content": system}, {"role": "user", "content": user}]}
        resp = self._client.post(self.config.path or "/chat/completions", json=body)
        if resp.status_code >= 400:
            raise BackendError(f"chat endpoint returned HTTP {resp.status_code}")
        try:
            return str(resp.json()["choices"][0]["message"]["content"])
        except (ValueError, KeyError, IndexError, TypeError):
            raise BackendError("chat response has no choices[0].message.content") from None

    def close(self) -> None:
        self._client.close()


class HttpEmbeddingBackend:
    """POST ``{model, input}``; accepts ``data[0].embedding``, ``embedding`` or ``vector`` replies."""

    def __init__(self, config: BackendConfig, dim: int | None = None,
                 transport: httpx.BaseTransport | None = None):
        self.config = config
        self.dim = dim
        self.max_in_flight = config.max_in_flight
        self._client = httpx.Client(base_url=config.base_url, timeout=config.timeout,
                                    headers=config.headers(), transport=transport)

    def embed(self, text: str) -> np.ndarray:
        resp = self._client.post(self.config.path or "/embeddings",
                                 json={"model": self.config.model, "input": text})
        if resp.status_code >= 400:
            raise BackendError(f"embedding endpoint returned HTTP {resp.status_code}")
        try:
            payload = resp.json()
            if "data" in payload:
                vec = payload["data"][0]["embedding"]
            else:
                vec = payload.get("embedding", payload.get("vector"))
            v = np.asarray(vec, dtype=np.float64)
        except (ValueError, KeyError, IndexError, TypeError, AttributeError):
            raise BackendError("embedding response carries no vector") from None
        if v.ndim != 1 or v.size == 0 or not np.all(np.isfinite(v)):
            raise BackendError("embedding response vector is empty or non-finite")
        if self.dim is None:
            self.dim = v.size
        elif v.size != self.dim:
            raise BackendError(f"embedding length {v.size}, expected {self.dim}")
        return v

    def close(self) -> None:
        self._client.close()


# --------------------------------------------------------------------- mocks

_TOKEN = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


class HashEmbeddingBackend:
    """Bag of hashed tokens, each mapped to a seeded Gaussian direction, then unit-normalised.

    Texts sharing tokens land close together; texts with disjoint tokens are
    nearly orthogonal for moderate ``dim``.
    """

    max_in_flight = 1

    def __init__(self, dim: int = 64, seed: int = 0):
        if dim < 1:
            raise ConfigurationError("embedding dim must be >= 1")
        self.dim, self.seed = dim, seed
        self._direction = lru_cache(maxsize=65536)(self._direction_uncached)

    def _direction_uncached(self, token: str) -> np.ndarray:
        h = int.from_bytes(hashlib.blake2b(token.encode(), digest_size=8).digest(), "little")
        return np.random.default_rng([self.seed, h]).standard_normal(self.dim)

    def embed(self, text: str) -> np.ndarray:
        tokens = tokenize(text)
        if not tokens:
            raise BackendError("cannot embed text without tokens")
        v = np.zeros(self.dim)
        for tok in tokens:
            v += self._direction(tok)
        n = np.linalg.norm(v)
        if n == 0.0:
            raise BackendError("token directions cancelled exactly")
        return v / n


_SUBJECT = re.compile(r"relevant to the (.+?), where the wider context")
_SUMMARY_LINE = re.compile(r"^- \[(.+?)\] (.*)$")


def _first_sentence(text: str, limit: int = 30) -> str:
    words = text.split()
    out = []
    for w in words[:limit]:
        out.append(w)
        if w.endswith((".", "!", "?")):
            break
    return " ".join(out)


class MockChatBackend:
    """Deterministic rule-based stand-in for an LLM, keyed on the prompt layout.

    * summary prompts: N/A unless the article body mentions the subject
      (case-insensitive); otherwise the headline plus the first sentence.
    * event prompts: one event per listed summary, in listed order.
    * insight prompts: key driver lists the window's event names joined by
      ``" | "``; outlook direction is a hash of those names.
    """

    max_in_flight = 4

    def __init__(self):
        self.calls = 0

    def complete(self, system: str, user: str) -> str:
        self.calls += 1
        if "Headline:" in user and "Article:" in user:
            return self._summary(user)
        if user.startswith("Below are summaries of news"):
            return self._events(user)
        if user.startswith("Target:"):
            return self._insight(user)
        raise BackendError("mock backend does not recognise this prompt")

    @staticmethod
    def _summary(user: str) -> str:
        m = _SUBJECT.search(user)
        subject = m.group(1).lower() if m else ""
        head, _, body = user.partition("\nHeadline: ")
        headline, _, article = body.partition("\n\nArticle:\n")
        if not subject or subject not in article.lower():
            return "N/A"
        return f"{headline.strip()}. {_first_sentence(article.strip())}"

    @staticmethod
    def _events(user: str) -> str:
        events = []
        for line in user.splitlines():
            m = _SUMMARY_LINE.match(line)
            if m:
                art, text = m.groups()
                name = " ".join(text.split()[:6]).rstrip(".,;:")
                events.append({"name": f"{name} ({art})", "summary": text,
                               "rationale": f"Reported in article {art}."})
        return json.dumps(events)

    @staticmethod
    def _insight(user: str) -> str:
        target = user.splitlines()[0].removeprefix("Target:").strip()
        names = []
        for line in user.splitlines():
            if line.startswith("{"):
                names.append(json.loads(line)["name"])
        digest = hashlib.sha256("\n".join(names).encode()).digest()[0]
        direction = ("upward" if digest % 3 == 0 else "downward" if digest % 3 == 1 else "sideways")
        return json.dumps({"key_driver": " | ".join(names),
                           "outlook": f"{target}: {direction} pressure expected, drawing on {len(names)} events."})


class ScriptedChatBackend:
    """Wraps a plain function ``(system, user) -> str``; handy for failure injection."""

    def __init__(self, fn: Callable[[str, str], str], max_in_flight: int = 1):
        self.fn = fn
        self.max_in_flight = max_in_flight

    def complete(self, system: str, user: str) -> str:
        return self.fn(system, user)
