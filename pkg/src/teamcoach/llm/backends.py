"""Concrete backends: HTTP chat completions, deterministic mock, fault injection."""

from __future__ import annotations

import hashlib
import os
import random
import re
import threading
from collections.abc import Callable, Iterable, Mapping

import httpx

from teamcoach.llm.core import (
    BackendConnectionError,
    BackendHttpError,
    BackendTimeoutError,
    CompletionRequest,
    CredentialMissingError,
    LlmError,
    MalformedResponseError,
    RawCompletion,
    Usage,
)
from teamcoach.llm.scrub import scrubber

DEFAULT_KEY_ENV = "TEAMCOACH_API_KEY"


class HttpBackend:
    """Chat-completions client for OpenAI-style JSON endpoints.

    The API key is read from the environment variable ``api_key_env`` when the
    backend is built and is registered with the log scrubber.
    """

    name = "http"

    def __init__(
        self,
        endpoint: str,
        api_key_env: str = DEFAULT_KEY_ENV,
        environ: Mapping[str, str] | None = None,
        transport: httpx.BaseTransport | None = None,
    ) -> None:
        env = os.environ if environ is None else environ
        key = env.get(api_key_env, "")
        if not key:
            raise CredentialMissingError(api_key_env)
        scrubber.register(key)
        self.endpoint = endpoint
        self._headers = {"Authorization": f"Bearer {key}", "Content-Type": "application/json"}
        self._client = httpx.Client(transport=transport)

    def close(self) -> None:
        self._client.close()

    def send(self, req: CompletionRequest, timeout_s: float) -> RawCompletion:
        body = {
            "model": req.model_id,
            "messages": [
                {"role": "system", "content": req.system_text},
                {"role": "user", "content": req.user_text},
            ],
            "max_tokens": req.max_output_tokens,
            "temperature": req.temperature,
        }
        try:
            resp = self._client.post(self.endpoint, json=body, headers=self._headers, timeout=timeout_s)
        except httpx.TimeoutException as exc:
            raise BackendTimeoutError(f"request timed out after {timeout_s}s") from exc
        except httpx.TransportError as exc:
            raise BackendConnectionError(f"transport error: {type(exc).__name__}") from exc
        if resp.status_code != 200:
            raise BackendHttpError(resp.status_code, resp.text[:200])
        try:
            doc = resp.json()
            text = doc["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise MalformedResponseError("response lacks choices[0].message.content") from exc
        if not isinstance(text, str) or not text.strip():
            raise MalformedResponseError("response content is empty")
        usage = doc.get("usage") or {}
        return RawCompletion(
            text,
            Usage(int(usage.get("prompt_tokens", 0)), int(usage.get("completion_tokens", 0))),
            f"http:{doc.get('model', req.model_id)}",
        )


_LABEL = re.compile(r"^(\w+): (.+)$", re.MULTILINE)

_TEAM_STRENGTHS = [
    "*Engagement:* Every member took part and ideas were answered quickly.",
    "*Collaboration:* Suggestions were built upon rather than dismissed.",
    "*Focus on Goals:* The discussion kept returning to the ranking itself.",
    "*Reasoning:* Members explained why an item mattered before placing it.",
    "*Positive Tone:* Agreement was expressed openly, which kept momentum.",
    "*Shared Knowledge:* Members drew on what others knew about the items.",
]
_TEAM_IMPROVEMENTS = [
    "*Participation Balance:* Contributions were not evenly spread across members.",
    "*Depth:* Several placements were agreed without discussing alternatives.",
    "*Turn-Taking:* Some questions went unanswered before the topic moved on.",
    "*Inclusive Language:* More use of we and our would strengthen unity.",
    "*Checking Understanding:* Summaries of the current ranking were rare.",
    "*Time Use:* The final items were ranked in a hurry.",
]
_TEAM_STEPS = [
    "Invite the quietest member to propose the next item.",
    "Restate the current ranking every few minutes.",
    "Ask for one reason before accepting a placement.",
    "Close each disagreement with an explicit decision.",
    "Reserve time at the end to review the lowest-ranked items.",
]
_MEMBER_STRENGTHS = [
    "*Engagement:* You contributed steadily to the discussion.",
    "*Alignment:* Your comments addressed the ranking task directly.",
    "*Collaboration:* You responded to teammates' proposals.",
    "*Tone:* Your messages supported a constructive atmosphere.",
    "*Clarity:* Your suggestions were easy to act on.",
]
_MEMBER_IMPROVEMENTS = [
    "*Depth of Contribution:* Add a reason when you propose a placement.",
    "*Inclusivity:* Ask quieter teammates for their view.",
    "*Language Style Matching:* Mirror the team's phrasing to build rapport.",
    "*Follow-through:* Return to open questions before moving on.",
    "*Tone:* Frame disagreement as an alternative rather than a rejection.",
]
_MEMBER_STEPS = [
    "Explain the reasoning behind each item you propose.",
    "Ask one teammate for their opinion in every round.",
    "Summarize the team's current ranking when the discussion stalls.",
    "Acknowledge a teammate's idea before adding your own.",
]


class MockBackend:
    """Deterministic offline backend.

    Output is a pure function of the request text and ``seed``. It recognises
    team, individual and ranking-evaluation prompts and answers with a
    well-formed sectioned document that echoes the values found on the
    prompt's labelled data lines (``TeamTask: ...``, ``TeamSentiment: ...``).
    """

    name = "mock"

    def __init__(self, seed: int = 0) -> None:
        self.seed = seed

    def send(self, req: CompletionRequest, timeout_s: float) -> RawCompletion:
        text = self.generate(req.system_text + "\n" + req.user_text)
        return RawCompletion(text, Usage(len(req.user_text.split()), len(text.split())), "mock")

    def generate(self, prompt: str) -> str:
        digest = hashlib.sha256(f"{self.seed}\0{prompt}".encode()).digest()
        rng = random.Random(int.from_bytes(digest[:8], "big"))
        labels: dict[str, str] = {}
        for m in _LABEL.finditer(prompt):
            labels.setdefault(m.group(1), m.group(2).strip())
        if "Expert Solution" in prompt:
            return self._ranking_eval(prompt, rng)
        if "Feedback Guide for " in prompt:
            return self._individual(labels, rng)
        return self._team(labels, rng)

    @staticmethod
    def _pick(rng: random.Random, pool: list[str], k: int) -> str:
        return "\n".join(f"- {line}" for line in rng.sample(pool, k))

    def _team(self, labels: dict[str, str], rng: random.Random) -> str:
        task = labels.get("TeamTask", "the team task")
        summary = f"Team goal: {task}\n"
        if "TeamSentiment" in labels:
            summary += f" The overall sentiment score of the conversation was {labels['TeamSentiment']}."
        if "TotalTeamMember" in labels:
            summary += f" All {labels['TotalTeamMember']} members were part of the discussion."
        summary += "\nThe conversation stayed largely on the ranking and reached a shared submission."
        return "\n".join(
            [
                "> Summary of Goals and Contributions",
                summary,
                "",
                "> Key Strengths",
                self._pick(rng, _TEAM_STRENGTHS, 3),
                "",
                "> Areas for Improvement",
                self._pick(rng, _TEAM_IMPROVEMENTS, 3),
                "",
                "> Actionable Steps",
                self._pick(rng, _TEAM_STEPS, 3),
            ]
        )

    def _individual(self, labels: dict[str, str], rng: random.Random) -> str:
        name = labels.get("TeamMemberName", "Team member")
        task = labels.get("TeamTask", "the team task")
        summary = f"Team goal: {task}\n{name} took part in the discussion."
        if "MemberWordsSpokenPercentage" in labels:
            summary += f" You spoke {labels['MemberWordsSpokenPercentage']} of the team's words."
        if "MemberSentiment" in labels:
            summary += f" Your sentiment score was {labels['MemberSentiment']}."
        if "LanguageStyleMatching" in labels:
            summary += f" Your language style matching score was {labels['LanguageStyleMatching']}."
        return "\n".join(
            [
                "> Summary of Contribution",
                summary,
                "",
                "> Key Strengths",
                self._pick(rng, _MEMBER_STRENGTHS, 2),
                "",
                "> Areas for Improvement",
                self._pick(rng, _MEMBER_IMPROVEMENTS, 2),
                "",
                "> Actionable Steps",
                self._pick(rng, _MEMBER_STEPS, 2),
            ]
        )

    @staticmethod
    def _ranking_eval(prompt: str, rng: random.Random) -> str:
        team = re.search(r"following ranking: (.+?) and received", prompt)
        expert = re.search(r"Expert Solution Ranking for the task is: (.+?)\.\n", prompt)
        if not team or not expert:
            return "> Ranking Evaluation\nThe submission could not be compared with the expert ranking."
        split = re.compile(r",?\s*\d+\. ")
        team_items = [s for s in split.split(" " + team.group(1)) if s]
        expert_items = [s for s in split.split(" " + expert.group(1)) if s]
        lines = ["> Ranking Evaluation"]
        for pos, item in enumerate(team_items[:3], 1):
            if item in expert_items:
                exp = expert_items.index(item) + 1
                verdict = "consistent with the expert ranking" if exp == pos else f"whereas the expert ranked it {exp}"
                lines.append(f"- The team ranked _{item}_ at position {pos}, {verdict}.")
        return "\n".join(lines)


class FaultInjectingBackend:
    """Wraps a backend and makes chosen request tags fail.

    ``failures`` maps a tag to how many leading attempts fail (None: every
    attempt). ``error`` builds the exception raised.
    """

    def __init__(
        self,
        inner,
        failures: Mapping[str, int | None],
        error: Callable[[], LlmError] = lambda: BackendHttpError(500, "injected"),
    ) -> None:
        self.inner = inner
        self.name = inner.name
        self.failures = dict(failures)
        self.error = error
        self.calls: list[str] = []
        self._lock = threading.Lock()

    def send(self, req: CompletionRequest, timeout_s: float) -> RawCompletion:
        with self._lock:
            self.calls.append(req.request_tag)
            seen = self.calls.count(req.request_tag)
        if req.request_tag in self.failures:
            limit = self.failures[req.request_tag]
            if limit is None or seen <= limit:
                raise self.error()
        return self.inner.send(req, timeout_s)


def fail_permanently(tags: Iterable[str]) -> dict[str, int | None]:
    return dict.fromkeys(tags, None)
