"""Append-only JSON-lines event log."""

from __future__ import annotations

import json
import threading
from collections.abc import Iterator
from datetime import datetime
from pathlib import Path
from typing import Any


class EventLog:
    """Events are dicts with at least ``event`` and ``at``; kept in memory and optionally on disk."""

    def __init__(self, path: str | Path | None = None) -> None:
        self.path = Path(path) if path else None
        self.events: list[dict[str, Any]] = []
        self._lock = threading.Lock()
        if self.path:
            self.path.parent.mkdir(parents=True, exist_ok=True)

    def emit(self, event: str, at: datetime, **fields: Any) -> dict[str, Any]:
        record = {"event": event, "at": at.isoformat(), **fields}
        line = json.dumps(record, ensure_ascii=False, default=str)
        with self._lock:
            self.events.append(record)
            if self.path:
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(line + "\n")
        return record

    def of(self, event: str) -> Iterator[dict[str, Any]]:
        return (e for e in list(self.events) if e["event"] == event)


def read_events(path: str | Path) -> list[dict[str, Any]]:
    with Path(path).open(encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
