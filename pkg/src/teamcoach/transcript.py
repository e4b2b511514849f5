"""Chat transcript ingestion.

Two input layouts are accepted:

``canonical-json``
    The package's own schema::

        {"schema_version": 1,
         "channel_id": "C01",
         "task_goal": "Rank the salvaged items ...",
         "members": [{"id": "U1", "alias": "alias-1"}, ...],
         "messages": [{"sender_id": "U1", "ts": "2024-05-01T12:00:00Z", "text": "..."}, ...]}

``chat-export``
    A single JSON document bundling the pieces of a workspace export
    (the layout Slack uses for ``users.json`` / ``channels.json`` / per-day
    message files)::

        {"channel": {"id": "C01", "name": "team-1", "members": ["U1", ...],
                     "purpose": {"value": "task goal"}},
         "users": [{"id": "U1", "name": "...", "profile": {"display_name": "alias-1"}}, ...],
         "messages": [{"type": "message", "user": "U1", "ts": "1714564800.000200", "text": "..."}, ...]}

    :func:`bundle_export_dir` assembles that document from an unpacked export
    directory.

Only aliases travel downstream; real names in an export are never read.
"""

from __future__ import annotations

import json
import logging
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from datetime import datetime, timezone
from decimal import Decimal, InvalidOperation
from enum import Enum
from pathlib import Path
from typing import Any

from teamcoach.errors import TeamcoachError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


class TranscriptError(TeamcoachError):
    pass


class TranscriptParseError(TranscriptError):
    """Input is not well-formed; ``offset`` is the byte position of the fault."""

    def __init__(self, message: str, offset: int) -> None:
        self.offset = offset
        super().__init__(f"{message} (at byte {offset})")


class TranscriptSchemaError(TranscriptError):
    pass


class EmptyTranscriptError(TranscriptError):
    pass


class UnknownMemberError(TranscriptError, LookupError):
    pass


class TranscriptFormat(str, Enum):
    CANONICAL = "canonical-json"
    CHAT_EXPORT = "chat-export"


@dataclass(frozen=True)
class Member:
    id: str
    alias: str


@dataclass(frozen=True)
class Message:
    sender_id: str
    sender_alias: str
    timestamp: datetime
    text: str
    channel_id: str


@dataclass(frozen=True)
class Transcript:
    channel_id: str
    task_goal: str
    members: tuple[Member, ...]
    messages: tuple[Message, ...]
    # parse bookkeeping, not part of the transcript's identity
    dropped_empty: int = field(default=0, compare=False)

    def __post_init__(self) -> None:
        if not self.members:
            raise TranscriptSchemaError("transcript has no members")
        ids = [m.id for m in self.members]
        if len(set(ids)) != len(ids):
            raise TranscriptSchemaError("duplicate member id")
        if not self.messages:
            raise EmptyTranscriptError(f"channel {self.channel_id!r} has no messages")
        known = set(ids)
        prev = None
        for msg in self.messages:
            if msg.sender_id not in known:
                raise TranscriptSchemaError(f"message from unknown sender {msg.sender_id!r}")
            if msg.timestamp.tzinfo is None:
                raise TranscriptSchemaError("naive timestamp in transcript")
            if not msg.text.strip():
                raise TranscriptSchemaError("empty message text")
            if prev is not None and msg.timestamp < prev:
                raise TranscriptSchemaError("messages are not in timestamp order")
            prev = msg.timestamp

    @property
    def member_ids(self) -> tuple[str, ...]:
        return tuple(m.id for m in self.members)

    def alias_of(self, member_id: str) -> str:
        for m in self.members:
            if m.id == member_id:
                return m.alias
        raise UnknownMemberError(member_id)

    def resolve_member(self, key: str) -> str:
        """Return the member id for ``key``, which may be an id or an alias."""
        for m in self.members:
            if key in (m.id, m.alias):
                return m.id
        raise UnknownMemberError(key)

    @property
    def start(self) -> datetime:
        return self.messages[0].timestamp

    @property
    def end(self) -> datetime:
        return self.messages[-1].timestamp

    def after(self, watermark: datetime | None) -> Transcript | None:
        """Sub-transcript of messages strictly newer than ``watermark``.

        Returns None when nothing is newer.
        """
        if watermark is None:
            return self
        fresh = tuple(m for m in self.messages if m.timestamp > watermark)
        if not fresh:
            return None
        return Transcript(self.channel_id, self.task_goal, self.members, fresh)


@dataclass(frozen=True)
class MemberView:
    member: str
    messages: tuple[Message, ...]


def member_view(t: Transcript, member: str) -> MemberView:
    if member not in t.member_ids:
        raise UnknownMemberError(f"{member!r} is not a member of channel {t.channel_id!r}")
    return MemberView(member, tuple(m for m in t.messages if m.sender_id == member))


def member_views(t: Transcript) -> dict[str, MemberView]:
    return {mid: member_view(t, mid) for mid in t.member_ids}


# -- parsing ------------------------------------------------------------------


def _decode_json(raw: bytes | str) -> Any:
    if isinstance(raw, bytes):
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise TranscriptParseError("invalid UTF-8", exc.start) from exc
    else:
        text = raw
    if text.startswith("\ufeff"):
        text = text[1:]
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise TranscriptParseError(exc.msg, offset) from exc


def _parse_rfc3339(value: Any) -> datetime:
    if not isinstance(value, str):
        raise TranscriptSchemaError(f"timestamp must be a string, got {value!r}")
    s = value.strip()
    if s.endswith(("Z", "z")):
        s = s[:-1] + "+00:00"
    try:
        ts = datetime.fromisoformat(s)
    except ValueError as exc:
        raise TranscriptSchemaError(f"unparseable timestamp {value!r}") from exc
    if ts.tzinfo is None:
        raise TranscriptSchemaError(f"timestamp {value!r} has no UTC offset")
    return ts.astimezone(timezone.utc)


def _parse_epoch(value: Any) -> datetime:
    try:
        seconds = Decimal(str(value))
    except InvalidOperation as exc:
        raise TranscriptSchemaError(f"unparseable export timestamp {value!r}") from exc
    whole = int(seconds)
    micros = int((seconds - whole) * 1_000_000)
    base = datetime.fromtimestamp(whole, tz=timezone.utc)
    return base.replace(microsecond=micros)


def _require(obj: Mapping[str, Any], key: str, where: str) -> Any:
    if not isinstance(obj, Mapping) or key not in obj:
        raise TranscriptSchemaError(f"{where}: missing {key!r}")
    return obj[key]


def _assemble(
    channel_id: str,
    task_goal: str,
    members: list[Member],
    rows: Iterable[tuple[str, datetime, str]],
    exclude: frozenset[str],
) -> Transcript:
    members = [m for m in members if m.id not in exclude]
    by_id = {m.id: m for m in members}
    messages: list[Message] = []
    dropped = 0
    for sender, ts, text in rows:
        if sender in exclude:
            continue
        if sender not in by_id:
            raise TranscriptSchemaError(f"message references unknown sender {sender!r}")
        if not isinstance(text, str) or not text.strip():
            dropped += 1
            continue
        messages.append(Message(sender, by_id[sender].alias, ts, text, channel_id))
    if dropped:
        logger.warning("dropped %d empty message(s) from channel %s", dropped, channel_id)
    if not messages:
        raise EmptyTranscriptError(f"channel {channel_id!r} has no messages")
    messages.sort(key=lambda m: m.timestamp)
    return Transcript(channel_id, task_goal, tuple(members), tuple(messages), dropped_empty=dropped)


def _from_canonical(doc: Any, exclude: frozenset[str]) -> Transcript:
    if not isinstance(doc, Mapping):
        raise TranscriptSchemaError("canonical transcript must be a JSON object")
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise TranscriptSchemaError(f"unsupported schema_version {version!r}")
    channel_id = str(_require(doc, "channel_id", "transcript"))
    task_goal = str(doc.get("task_goal", ""))
    members = []
    for i, m in enumerate(_require(doc, "members", "transcript")):
        members.append(Member(str(_require(m, "id", f"members[{i}]")), str(_require(m, "alias", f"members[{i}]"))))
    rows = []
    for i, msg in enumerate(_require(doc, "messages", "transcript")):
        where = f"messages[{i}]"
        rows.append(
            (
                str(_require(msg, "sender_id", where)),
                _parse_rfc3339(_require(msg, "ts", where)),
                _require(msg, "text", where),
            )
        )
    return _assemble(channel_id, task_goal, members, rows, exclude)


def _from_chat_export(doc: Any, exclude: frozenset[str]) -> Transcript:
    if not isinstance(doc, Mapping):
        raise TranscriptSchemaError("chat export must be a JSON object")
    channel = _require(doc, "channel", "export")
    channel_id = str(_require(channel, "id", "channel"))
    task_goal = doc.get("task_goal")
    if task_goal is None:
        task_goal = (channel.get("purpose") or {}).get("value") or (channel.get("topic") or {}).get("value") or ""
    users = {}
    for i, u in enumerate(_require(doc, "users", "export")):
        uid = str(_require(u, "id", f"users[{i}]"))
        profile = u.get("profile") or {}
        users[uid] = profile.get("display_name") or u.get("name") or ""

    raw_messages = _require(doc, "messages", "export")
    rows = []
    skipped = 0
    for i, msg in enumerate(raw_messages):
        if msg.get("subtype") or msg.get("bot_id"):
            skipped += 1
            continue
        rows.append((str(_require(msg, "user", f"messages[{i}]")), _parse_epoch(_require(msg, "ts", f"messages[{i}]")), msg.get("text", "")))
    if skipped:
        logger.info("skipped %d system/bot message(s) in export of %s", skipped, channel_id)

    roster = channel.get("members")
    if roster is None:
        roster = list(dict.fromkeys(r[0] for r in rows))
    members = []
    generated = 0
    for uid in roster:
        uid = str(uid)
        if uid not in users:
            raise TranscriptSchemaError(f"channel member {uid!r} missing from users")
        alias = users[uid]
        if not alias:
            generated += 1
            alias = f"alias-{generated}"
        members.append(Member(uid, alias))
    return _assemble(channel_id, str(task_goal), members, rows, exclude)


def parse_transcript(
    raw: bytes | str,
    format: TranscriptFormat | str = TranscriptFormat.CANONICAL,
    exclude_senders: Iterable[str] = (),
) -> Transcript:
    """Parse ``raw`` into a validated, timestamp-ordered :class:`Transcript`.

    Whitespace-only messages are dropped and counted in
    ``Transcript.dropped_empty``. Messages from ``exclude_senders`` (the
    agent's own identity) are removed along with those members.
    """
    fmt = TranscriptFormat(format)
    doc = _decode_json(raw)
    exclude = frozenset(exclude_senders)
    if fmt is TranscriptFormat.CANONICAL:
        return _from_canonical(doc, exclude)
    return _from_chat_export(doc, exclude)


def _format_ts(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


def transcript_to_dict(t: Transcript) -> dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "channel_id": t.channel_id,
        "task_goal": t.task_goal,
        "members": [{"id": m.id, "alias": m.alias} for m in t.members],
        "messages": [{"sender_id": m.sender_id, "ts": _format_ts(m.timestamp), "text": m.text} for m in t.messages],
    }


def dumps_transcript(t: Transcript) -> bytes:
    return json.dumps(transcript_to_dict(t), indent=2, ensure_ascii=False).encode("utf-8")


def load_transcript(path: str | Path, format: TranscriptFormat | str | None = None, exclude_senders: Iterable[str] = ()) -> Transcript:
    p = Path(path)
    if p.is_dir():
        return parse_transcript(json.dumps(bundle_export_dir(p)), TranscriptFormat.CHAT_EXPORT, exclude_senders)
    data = p.read_bytes()
    if format is None:
        doc = _decode_json(data)
        format = TranscriptFormat.CHAT_EXPORT if isinstance(doc, Mapping) and "channel" in doc else TranscriptFormat.CANONICAL
    return parse_transcript(data, format, exclude_senders)


def bundle_export_dir(root: str | Path, channel: str | None = None) -> dict[str, Any]:
    """Build a chat-export document from an unpacked workspace export.

    Expects ``users.json``, ``channels.json`` and one directory of per-day
    message files per channel. ``channel`` selects by name or id; it may be
    omitted when the export holds a single channel.
    """
    root = Path(root)
    users = json.loads((root / "users.json").read_text(encoding="utf-8"))
    channels = json.loads((root / "channels.json").read_text(encoding="utf-8"))
    if channel is None:
        if len(channels) != 1:
            raise TranscriptSchemaError("export holds several channels; pick one")
        chosen = channels[0]
    else:
        matches = [c for c in channels if channel in (c.get("id"), c.get("name"))]
        if not matches:
            raise TranscriptSchemaError(f"channel {channel!r} not in export")
        chosen = matches[0]
    messages: list[dict[str, Any]] = []
    for day in sorted((root / chosen["name"]).glob("*.json")):
        messages.extend(json.loads(day.read_text(encoding="utf-8")))
    return {"channel": chosen, "users": users, "messages": messages}


def format_for_prompt(messages: Iterable[Message]) -> str:
    """One line per message: ``[timestamp] alias: text``."""
    return "\n".join(f"[{_format_ts(m.timestamp)}] {m.sender_alias}: {m.text.strip()}" for m in messages)
