"""Posting feedback into the chat workspace.

Team feedback goes to the team channel and mentions every member;
individual feedback is always private. Messages carry mention placeholders
``{{mention:<member id>}}`` that each adapter expands to its own syntax after
escaping the body.
"""

from __future__ import annotations

import json
import logging
import os
import re
import threading
from collections.abc import Callable, Iterable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Protocol

import httpx

from teamcoach.errors import ConfigError, TeamcoachError
from teamcoach.feedback.pipeline import FeedbackMessage
from teamcoach.llm.core import TEAM_TAG
from teamcoach.llm.scrub import scrubber

logger = logging.getLogger(__name__)

MENTION = re.compile(r"\{\{mention:([^{}\s]+)\}\}")
DEFAULT_TOKEN_ENV = "TEAMCOACH_BOT_TOKEN"


class DeliveryError(TeamcoachError):
    """A send failed; the message says why."""


class TargetKind(str, Enum):
    CHANNEL_PUBLIC = "channel-public"
    MEMBER_PRIVATE = "member-private"


@dataclass(frozen=True)
class DeliveryTarget:
    kind: TargetKind
    channel_id: str
    member_id: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", TargetKind(self.kind))
        if self.kind is TargetKind.MEMBER_PRIVATE and not self.member_id:
            raise ValueError("a private target needs a member id")
        if self.kind is TargetKind.CHANNEL_PUBLIC and self.member_id:
            raise ValueError("a public target has no member id")


@dataclass(frozen=True)
class OutboundMessage:
    target: DeliveryTarget
    body: str
    audience: str
    idempotency_key: str
    mention_all: bool = False
    mentions: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.body.strip():
            raise ValueError("outbound body must be non-empty")
        if self.mention_all and self.target.kind is not TargetKind.CHANNEL_PUBLIC:
            raise ValueError("mention_all is only allowed on public targets")


@dataclass(frozen=True)
class Routing:
    """Where a team's feedback goes: its channel and its members."""

    channel_id: str
    members: tuple[str, ...]

    def target_for(self, audience: str) -> DeliveryTarget:
        if audience == TEAM_TAG:
            return DeliveryTarget(TargetKind.CHANNEL_PUBLIC, self.channel_id)
        if audience.startswith("member:") and audience[7:] in self.members:
            return DeliveryTarget(TargetKind.MEMBER_PRIVATE, self.channel_id, audience[7:])
        raise ConfigError(f"no route for audience {audience!r} in channel {self.channel_id}", field="delivery.routing")


def idempotency_key(cycle_id: str, audience: str) -> str:
    return f"{cycle_id}:{audience}"


def format_outbound(msg: FeedbackMessage, routing: Routing, cycle_id: str) -> OutboundMessage:
    """Address ``msg``; team messages get a leading line mentioning every member."""
    target = routing.target_for(msg.audience)
    key = idempotency_key(cycle_id, msg.audience)
    if target.kind is TargetKind.CHANNEL_PUBLIC:
        tags = " ".join(f"{{{{mention:{m}}}}}" for m in routing.members)
        return OutboundMessage(target, f"{tags}\n\n{msg.raw.strip()}", msg.audience, key, True, routing.members)
    return OutboundMessage(target, msg.raw.strip(), msg.audience, key)


def expand_mentions(body: str, syntax: Callable[[str], str]) -> str:
    return MENTION.sub(lambda m: syntax(m.group(1)), body)


class Adapter(Protocol):
    name: str
    serial: bool

    def send(self, out: OutboundMessage) -> str:
        """Post ``out`` and return a platform receipt; raise DeliveryError on failure."""
        ...


class MemoryAdapter:
    """Keeps sent messages in a list; handy for simulations and tests."""

    name = "memory"
    serial = False

    def __init__(self) -> None:
        self.sent: list[OutboundMessage] = []
        self._lock = threading.Lock()

    def send(self, out: OutboundMessage) -> str:
        with self._lock:
            self.sent.append(out)
            return f"mem-{len(self.sent)}"


class DryRunAdapter:
    """Writes each message to a markdown file under ``out_dir`` and logs it in ``index.jsonl``."""

    name = "dry-run"
    serial = True

    def __init__(self, out_dir: str | Path) -> None:
        self.out_dir = Path(out_dir)
        self._count = 0

    def send(self, out: OutboundMessage) -> str:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self._count += 1
        t = out.target
        who = t.member_id if t.member_id else "channel"
        safe = re.sub(r"[^\w.-]", "_", f"{t.channel_id}_{who}")
        path = self.out_dir / f"{self._count:04d}_{safe}.md"
        path.write_text(expand_mentions(out.body, lambda m: f"@{m}") + "\n", encoding="utf-8")
        entry = {"file": path.name, "target": _target_dict(t), "audience": out.audience, "key": out.idempotency_key}
        with (self.out_dir / "index.jsonl").open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry) + "\n")
        return path.name


def _target_dict(t: DeliveryTarget) -> dict[str, Any]:
    return {"kind": t.kind.value, "channel_id": t.channel_id, "member_id": t.member_id}


class WebhookAdapter:
    """POSTs ``{target, text, mentions}`` JSON to an incoming-webhook URL."""

    name = "webhook"
    serial = False

    def __init__(self, url: str, timeout_s: float = 30.0, transport: httpx.BaseTransport | None = None) -> None:
        self.url = url
        self.timeout_s = timeout_s
        self._client = httpx.Client(transport=transport)

    def send(self, out: OutboundMessage) -> str:
        payload = {
            "target": _target_dict(out.target),
            "text": expand_mentions(out.body, lambda m: f"<@{m}>"),
            "mentions": list(out.mentions),
        }
        try:
            resp = self._client.post(
                self.url, json=payload, headers={"Idempotency-Key": out.idempotency_key}, timeout=self.timeout_s
            )
        except httpx.HTTPError as exc:
            raise DeliveryError(f"webhook transport error: {type(exc).__name__}") from exc
        if resp.status_code >= 300:
            raise DeliveryError(f"webhook returned HTTP {resp.status_code}")
        return resp.headers.get("x-message-id", str(resp.status_code))


def escape_workspace(text: str) -> str:
    """Escape the three control characters of the workspace markup."""
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


class WorkspaceApiAdapter:
    """Slack-style Web API client.

    Public messages use ``chat.postMessage``. Private ones use
    ``chat.postEphemeral`` ("only visible to you") by default, or a direct
    message opened with ``conversations.open`` when ``private_mode="dm"``.
    """

    name = "workspace-api"
    serial = False

    def __init__(
        self,
        base_url: str = "https://slack.com/api",
        token_env: str = DEFAULT_TOKEN_ENV,
        private_mode: str = "ephemeral",
        environ: Mapping[str, str] | None = None,
        transport: httpx.BaseTransport | None = None,
        timeout_s: float = 30.0,
    ) -> None:
        if private_mode not in ("ephemeral", "dm"):
            raise ConfigError(f"unknown private mode {private_mode!r}", field="delivery.private_mode")
        env = os.environ if environ is None else environ
        token = env.get(token_env, "")
        if not token:
            raise ConfigError(f"bot token environment variable {token_env} is not set", field=token_env)
        scrubber.register(token)
        self.base_url = base_url.rstrip("/")
        self.private_mode = private_mode
        self.timeout_s = timeout_s
        self._headers = {"Authorization": f"Bearer {token}"}
        self._client = httpx.Client(transport=transport)

    def _call(self, method: str, payload: dict[str, Any]) -> dict[str, Any]:
        try:
            resp = self._client.post(
                f"{self.base_url}/{method}", json=payload, headers=self._headers, timeout=self.timeout_s
            )
        except httpx.HTTPError as exc:
            raise DeliveryError(f"{method}: transport error {type(exc).__name__}") from exc
        if resp.status_code != 200:
            raise DeliveryError(f"{method}: HTTP {resp.status_code}")
        try:
            doc = resp.json()
        except ValueError as exc:
            raise DeliveryError(f"{method}: response is not JSON") from exc
        if not doc.get("ok"):
            raise DeliveryError(f"{method}: {doc.get('error', 'unknown error')}")
        return doc

    def send(self, out: OutboundMessage) -> str:
        text = expand_mentions(escape_workspace(out.body), lambda m: f"<@{m}>")
        t = out.target
        if t.kind is TargetKind.CHANNEL_PUBLIC:
            return str(self._call("chat.postMessage", {"channel": t.channel_id, "text": text}).get("ts", ""))
        if self.private_mode == "ephemeral":
            doc = self._call("chat.postEphemeral", {"channel": t.channel_id, "user": t.member_id, "text": text})
            return str(doc.get("message_ts", ""))
        dm = self._call("conversations.open", {"users": t.member_id})["channel"]["id"]
        return str(self._call("chat.postMessage", {"channel": dm, "text": text}).get("ts", ""))


class IdempotencyLedger:
    """Keys of messages the adapter has confirmed, optionally persisted as JSON."""

    def __init__(self, path: str | Path | None = None) -> None:
        self.path = Path(path) if path else None
        self._keys: set[str] = set()
        self._lock = threading.Lock()
        if self.path and self.path.exists():
            self._keys = set(json.loads(self.path.read_text(encoding="utf-8")))

    def seen(self, key: str) -> bool:
        with self._lock:
            return key in self._keys

    def mark(self, key: str) -> None:
        with self._lock:
            self._keys.add(key)
            if self.path:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                tmp = self.path.with_suffix(".tmp")
                tmp.write_text(json.dumps(sorted(self._keys), indent=0), encoding="utf-8")
                os.replace(tmp, self.path)


@dataclass(frozen=True)
class DeliveryRecord:
    audience: str
    target: DeliveryTarget
    status: str  # "ok", "failed" or "duplicate"
    detail: str = ""
    key: str = ""

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["target"] = _target_dict(self.target)
        return d


@dataclass(frozen=True)
class DeliveryReport:
    cycle_id: str
    records: tuple[DeliveryRecord, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> list[DeliveryRecord]:
        return [r for r in self.records if r.status == "ok"]

    @property
    def failed(self) -> list[DeliveryRecord]:
        return [r for r in self.records if r.status == "failed"]

    def privacy_violations(self) -> list[DeliveryRecord]:
        return [r for r in self.records if r.audience != TEAM_TAG and r.target.kind is TargetKind.CHANNEL_PUBLIC]

    def to_dict(self) -> dict[str, Any]:
        return {"cycle_id": self.cycle_id, "records": [r.to_dict() for r in self.records]}


def _send_one(adapter: Adapter, out: OutboundMessage, ledger: IdempotencyLedger | None) -> DeliveryRecord:
    if ledger is not None and ledger.seen(out.idempotency_key):
        return DeliveryRecord(out.audience, out.target, "duplicate", "already delivered", out.idempotency_key)
    try:
        receipt = adapter.send(out)
    except DeliveryError as exc:
        logger.warning("delivery of %s failed: %s", out.idempotency_key, exc)
        return DeliveryRecord(out.audience, out.target, "failed", str(exc), out.idempotency_key)
    if ledger is not None:
        ledger.mark(out.idempotency_key)
    return DeliveryRecord(out.audience, out.target, "ok", receipt, out.idempotency_key)


def deliver(
    msgs: Sequence[FeedbackMessage],
    routing: Routing,
    adapter: Adapter,
    cycle_id: str,
    ledger: IdempotencyLedger | None = None,
    max_parallel: int = 4,
) -> DeliveryReport:
    """Send the team message first, then the individual ones.

    Every audience is routed before anything is sent, so an unroutable
    audience raises ConfigError with nothing posted. A failed send is
    recorded and does not stop the others.
    """
    outbound = [format_outbound(m, routing, cycle_id) for m in _team_first(msgs)]
    records: list[DeliveryRecord] = []
    rest = outbound
    if outbound and outbound[0].audience == TEAM_TAG:
        records.append(_send_one(adapter, outbound[0], ledger))
        rest = outbound[1:]
    if adapter.serial or max_parallel <= 1:
        records.extend(_send_one(adapter, o, ledger) for o in rest)
    else:
        with ThreadPoolExecutor(max_workers=max_parallel, thread_name_prefix="deliver") as pool:
            records.extend(pool.map(lambda o: _send_one(adapter, o, ledger), rest))
    return DeliveryReport(cycle_id, tuple(records))


def _team_first(msgs: Iterable[FeedbackMessage]) -> list[FeedbackMessage]:
    return sorted(msgs, key=lambda m: 0 if m.audience == TEAM_TAG else 1)


def announce(
    adapter: Adapter, channel_id: str, text: str, key: str, ledger: IdempotencyLedger | None = None
) -> DeliveryRecord:
    """Post a plain public message (for example a score reveal) to a channel."""
    out = OutboundMessage(DeliveryTarget(TargetKind.CHANNEL_PUBLIC, channel_id), text, "announcement", key)
    return _send_one(adapter, out, ledger)
