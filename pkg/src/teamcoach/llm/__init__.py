"""LLM backends and the completion calls made against them."""

from teamcoach.llm.backends import (
    DEFAULT_KEY_ENV,
    FaultInjectingBackend,
    HttpBackend,
    MockBackend,
    fail_permanently,
)
from teamcoach.llm.core import (
    RANKING_TAG,
    TEAM_TAG,
    Backend,
    BackendConnectionError,
    BackendHttpError,
    BackendPolicy,
    BackendTimeoutError,
    CompletionRequest,
    CompletionResult,
    CredentialMissingError,
    FanOutResult,
    LlmError,
    MalformedResponseError,
    RawCompletion,
    Usage,
    complete,
    fan_out,
    member_tag,
)
from teamcoach.llm.fixtures import (
    FixtureMissingError,
    FixtureStore,
    RecordingBackend,
    ReplayBackend,
)
from teamcoach.llm.scrub import CredentialScrubber, scrubber

__all__ = [
    "DEFAULT_KEY_ENV",
    "RANKING_TAG",
    "TEAM_TAG",
    "Backend",
    "BackendConnectionError",
    "BackendHttpError",
    "BackendPolicy",
    "BackendTimeoutError",
    "CompletionRequest",
    "CompletionResult",
    "CredentialMissingError",
    "CredentialScrubber",
    "FanOutResult",
    "FaultInjectingBackend",
    "FixtureMissingError",
    "FixtureStore",
    "HttpBackend",
    "LlmError",
    "MalformedResponseError",
    "MockBackend",
    "RawCompletion",
    "RecordingBackend",
    "ReplayBackend",
    "Usage",
    "complete",
    "fail_permanently",
    "fan_out",
    "member_tag",
    "scrubber",
]
