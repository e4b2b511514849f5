"""Backend-neutral completion calls: request types, retries and fan-out."""

from __future__ import annotations

import hashlib
import json
import logging
import time
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Protocol

from teamcoach.errors import ConfigError, TeamcoachError

logger = logging.getLogger(__name__)

TEAM_TAG = "team"
RANKING_TAG = "ranking-eval"
MEMBER_PREFIX = "member:"


def member_tag(member_id: str) -> str:
    return MEMBER_PREFIX + member_id


def is_valid_tag(tag: str) -> bool:
    return tag in (TEAM_TAG, RANKING_TAG) or (tag.startswith(MEMBER_PREFIX) and len(tag) > len(MEMBER_PREFIX))


@dataclass(frozen=True)
class CompletionRequest:
    system_text: str
    user_text: str
    model_id: str = "mock"
    max_output_tokens: int = 1024
    temperature: float = 0.0
    request_tag: str = TEAM_TAG

    def __post_init__(self) -> None:
        if not self.system_text.strip() or not self.user_text.strip():
            raise ValueError("request texts must be non-empty")
        if not is_valid_tag(self.request_tag):
            raise ValueError(f"invalid request tag {self.request_tag!r}")
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be positive")

    def digest(self) -> str:
        """Content hash used to key recorded fixtures; the tag is not part of it."""
        body = json.dumps(
            [self.system_text, self.user_text, self.model_id, self.max_output_tokens, self.temperature],
            ensure_ascii=False,
        )
        return hashlib.sha256(body.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Usage:
    prompt_tokens: int = 0
    completion_tokens: int = 0


@dataclass(frozen=True)
class RawCompletion:
    """What a backend hands back for one attempt."""

    text: str
    usage: Usage = field(default_factory=Usage)
    backend: str = ""


@dataclass(frozen=True)
class CompletionResult:
    text: str
    latency_s: float
    usage: Usage
    backend: str
    request_tag: str
    attempts: int = 1

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("completion text must be non-empty")


@dataclass(frozen=True)
class BackendPolicy:
    timeout_s: float = 120.0
    retries: int = 2
    backoff_s: float = 1.0
    backoff_factor: float = 2.0
    max_concurrency: int = 4

    def __post_init__(self) -> None:
        if self.retries < 0:
            raise ConfigError("must be >= 0", field="llm.retries")
        if self.max_concurrency < 1:
            raise ConfigError("must be >= 1", field="llm.max_concurrency")
        if self.timeout_s <= 0:
            raise ConfigError("must be positive", field="llm.timeout_s")
        if self.backoff_s < 0 or self.backoff_factor < 1:
            raise ConfigError("backoff must be >= 0 with factor >= 1", field="llm.backoff_s")

    def delay(self, attempt: int) -> float:
        """Sleep before retry number ``attempt`` (1-based)."""
        return self.backoff_s * self.backoff_factor ** (attempt - 1)


class LlmError(TeamcoachError):
    transient = False

    def __init__(self, message: str, request_tag: str = "", attempts: int = 0) -> None:
        super().__init__(message)
        self.request_tag = request_tag
        self.attempts = attempts


class BackendTimeoutError(LlmError):
    transient = True


class BackendConnectionError(LlmError):
    transient = True


class BackendHttpError(LlmError):
    def __init__(self, status: int, message: str = "", request_tag: str = "", attempts: int = 0) -> None:
        super().__init__(f"backend returned HTTP {status}" + (f": {message}" if message else ""), request_tag, attempts)
        self.status = status

    @property
    def transient(self) -> bool:  # type: ignore[override]
        return self.status == 429 or self.status >= 500


class MalformedResponseError(LlmError):
    pass


class CredentialMissingError(ConfigError):
    def __init__(self, env_var: str) -> None:
        super().__init__(f"credential environment variable {env_var} is not set", field=env_var)
        self.env_var = env_var


class Backend(Protocol):
    name: str

    def send(self, req: CompletionRequest, timeout_s: float) -> RawCompletion: ...


def complete(
    backend: Backend,
    req: CompletionRequest,
    policy: BackendPolicy | None = None,
    sleep: Callable[[float], None] = time.sleep,
    clock: Callable[[], float] = time.monotonic,
) -> CompletionResult:
    """Send ``req``, retrying transient failures with exponential backoff.

    Timeouts, transport errors, HTTP 429 and 5xx are retried up to
    ``policy.retries`` times; anything else fails at once. The raised error
    carries the request tag and the number of attempts made.
    """
    policy = policy or BackendPolicy()
    attempt = 0
    start = clock()
    while True:
        attempt += 1
        try:
            raw = backend.send(req, policy.timeout_s)
            if not raw.text.strip():
                raise MalformedResponseError("backend returned empty text")
        except LlmError as exc:
            exc.request_tag = req.request_tag
            exc.attempts = attempt
            if exc.transient and attempt <= policy.retries:
                wait = policy.delay(attempt)
                logger.warning("%s: attempt %d failed (%s); retrying in %.2fs", req.request_tag, attempt, exc, wait)
                sleep(wait)
                continue
            logger.error("%s: giving up after %d attempt(s): %s", req.request_tag, attempt, exc)
            raise
        return CompletionResult(
            text=raw.text,
            latency_s=clock() - start,
            usage=raw.usage,
            backend=raw.backend or backend.name,
            request_tag=req.request_tag,
            attempts=attempt,
        )


@dataclass(frozen=True)
class FanOutResult:
    results: dict[str, CompletionResult]
    failures: dict[str, LlmError]

    @property
    def complete(self) -> bool:
        return not self.failures

    @property
    def failed_tags(self) -> list[str]:
        return list(self.failures)


def fan_out(
    backend: Backend,
    team_req: CompletionRequest,
    member_reqs: Sequence[CompletionRequest],
    policy: BackendPolicy | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> FanOutResult:
    """Issue the team request and one request per member with bounded parallelism.

    Requests are submitted team first, then members in order; with
    ``max_concurrency=1`` they run strictly in that order. A failed request is
    reported under its tag and does not affect the others.
    """
    policy = policy or BackendPolicy()
    if team_req.request_tag != TEAM_TAG:
        raise ValueError("the team request must be tagged 'team'")
    reqs = [team_req, *member_reqs]
    tags = [r.request_tag for r in reqs]
    if len(set(tags)) != len(tags):
        raise ValueError("request tags must be unique within a cycle")
    if any(not t.startswith(MEMBER_PREFIX) for t in tags[1:]):
        raise ValueError("member requests must be tagged 'member:<id>'")

    def run(req: CompletionRequest) -> CompletionResult | LlmError:
        try:
            return complete(backend, req, policy, sleep)
        except LlmError as exc:
            return exc

    with ThreadPoolExecutor(max_workers=policy.max_concurrency, thread_name_prefix="llm") as pool:
        futures = [pool.submit(run, r) for r in reqs]
        outcomes = [f.result() for f in futures]
    results: dict[str, CompletionResult] = {}
    failures: dict[str, LlmError] = {}
    for tag, outcome in zip(tags, outcomes):
        if isinstance(outcome, LlmError):
            failures[tag] = outcome
        else:
            results[tag] = outcome
    return FanOutResult(results, failures)
