"""Wall-clock and simulated time."""

from __future__ import annotations

import threading
from datetime import datetime, timedelta, timezone
from typing import Protocol


class Clock(Protocol):
    def now(self) -> datetime: ...

    def wait_until(self, when: datetime) -> None: ...


class SystemClock:
    def __init__(self, stop: threading.Event | None = None) -> None:
        self.stop = stop or threading.Event()

    def now(self) -> datetime:
        return datetime.now(timezone.utc)

    def wait_until(self, when: datetime) -> None:
        delay = (when - self.now()).total_seconds()
        if delay > 0:
            self.stop.wait(delay)


class SimulatedClock:
    """Time moves only when someone waits; waiting returns immediately."""

    def __init__(self, start: datetime | None = None) -> None:
        self._now = start or datetime(2024, 1, 1, tzinfo=timezone.utc)
        self._lock = threading.Lock()

    def now(self) -> datetime:
        with self._lock:
            return self._now

    def wait_until(self, when: datetime) -> None:
        with self._lock:
            if when > self._now:
                self._now = when

    def advance(self, delta: timedelta) -> None:
        with self._lock:
            self._now += delta


def sleep_for(clock: Clock, delta: timedelta) -> None:
    clock.wait_until(clock.now() + delta)

