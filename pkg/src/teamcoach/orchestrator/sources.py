"""Where scheduled cycles read channel transcripts from, and per-channel watermarks."""

from __future__ import annotations

import json
import os
import threading
from collections.abc import Iterable, Mapping
from datetime import datetime
from pathlib import Path
from typing import Any, Protocol

import httpx

from teamcoach.errors import ConfigError, TeamcoachError
from teamcoach.llm.scrub import scrubber
from teamcoach.transcript import (
    Transcript,
    TranscriptFormat,
    load_transcript,
    parse_transcript,
)


class SourceError(TeamcoachError):
    pass


class ChannelSource(Protocol):
    def fetch(self, channel_id: str, since: datetime | None) -> Transcript: ...


class DirectorySource:
    """Reads ``<root>/<channel_id>.json`` (either transcript format) or an export directory ``<root>/<channel_id>/``."""

    def __init__(self, root: str | Path, exclude_senders: Iterable[str] = ()) -> None:
        self.root = Path(root)
        self.exclude = tuple(exclude_senders)

    def fetch(self, channel_id: str, since: datetime | None) -> Transcript:
        for candidate in (self.root / f"{channel_id}.json", self.root / channel_id):
            if candidate.exists():
                return load_transcript(candidate, exclude_senders=self.exclude)
        raise SourceError(f"no transcript for channel {channel_id!r} under {self.root}")


class WorkspaceApiSource:
    """Pulls channel history through a Slack-style Web API."""

    def __init__(
        self,
        base_url: str = "https://slack.com/api",
        token_env: str = "TEAMCOACH_BOT_TOKEN",
        exclude_senders: Iterable[str] = (),
        environ: Mapping[str, str] | None = None,
        transport: httpx.BaseTransport | None = None,
    ) -> None:
        env = os.environ if environ is None else environ
        token = env.get(token_env, "")
        if not token:
            raise ConfigError(f"bot token environment variable {token_env} is not set", field=token_env)
        scrubber.register(token)
        self.base_url = base_url.rstrip("/")
        self.exclude = tuple(exclude_senders)
        self._client = httpx.Client(transport=transport, headers={"Authorization": f"Bearer {token}"})

    def _get(self, method: str, **params: Any) -> dict[str, Any]:
        try:
            resp = self._client.get(f"{self.base_url}/{method}", params=params, timeout=30.0)
            doc = resp.json()
        except (httpx.HTTPError, ValueError) as exc:
            raise SourceError(f"{method}: {type(exc).__name__}") from exc
        if not doc.get("ok"):
            raise SourceError(f"{method}: {doc.get('error', 'unknown error')}")
        return doc

    def fetch(self, channel_id: str, since: datetime | None) -> Transcript:
        info = self._get("conversations.info", channel=channel_id)["channel"]
        member_ids = self._get("conversations.members", channel=channel_id).get("members", [])
        users = [self._get("users.info", user=u)["user"] for u in member_ids]
        params: dict[str, Any] = {"channel": channel_id, "limit": 1000}
        if since is not None:
            params["oldest"] = f"{since.timestamp():.6f}"
        messages = self._get("conversations.history", **params).get("messages", [])
        info.setdefault("members", member_ids)
        doc = {"channel": info, "users": users, "messages": list(reversed(messages))}
        return parse_transcript(json.dumps(doc), TranscriptFormat.CHAT_EXPORT, self.exclude)


class WatermarkStore:
    """Timestamp of the newest analysed message per channel, persisted as JSON."""

    def __init__(self, path: str | Path | None = None) -> None:
        self.path = Path(path) if path else None
        self._marks: dict[str, str] = {}
        self._lock = threading.Lock()
        if self.path and self.path.exists():
            self._marks = json.loads(self.path.read_text(encoding="utf-8"))

    def get(self, channel_id: str) -> datetime | None:
        with self._lock:
            value = self._marks.get(channel_id)
        return datetime.fromisoformat(value) if value else None

    def advance(self, channel_id: str, ts: datetime) -> None:
        """Move the watermark forward; never backwards."""
        with self._lock:
            current = self._marks.get(channel_id)
            if current and datetime.fromisoformat(current) >= ts:
                return
            self._marks[channel_id] = ts.isoformat()
            if self.path:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                tmp = self.path.with_suffix(".tmp")
                tmp.write_text(json.dumps(self._marks, indent=2, sort_keys=True), encoding="utf-8")
                os.replace(tmp, self.path)
