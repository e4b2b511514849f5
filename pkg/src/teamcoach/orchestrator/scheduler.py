"""Interval-driven feedback cycles over a set of channels."""

from __future__ import annotations

import logging
import time
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import timedelta
from pathlib import Path
from typing import Any

from teamcoach.delivery import (
    Adapter,
    DeliveryRecord,
    DeliveryReport,
    IdempotencyLedger,
    Routing,
    deliver,
)
from teamcoach.errors import ConfigError, TeamcoachError
from teamcoach.feedback import FeedbackConfig, MetricBundle, analyze, generate_feedback
from teamcoach.llm import Backend, BackendPolicy
from teamcoach.orchestrator.clock import Clock, SystemClock
from teamcoach.orchestrator.events import EventLog
from teamcoach.orchestrator.sources import ChannelSource, WatermarkStore
from teamcoach.transcript import Transcript

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Schedule:
    interval: timedelta
    channels: tuple[str, ...]
    enabled: bool = True

    def __post_init__(self) -> None:
        if self.interval <= timedelta(0):
            raise ConfigError("interval must be positive", field="schedule.interval_minutes")


@dataclass(frozen=True)
class CycleOutcome:
    channel_id: str
    status: str  # "delivered", "partial", "skipped" or "failed"
    cycle_id: str = ""
    detail: str = ""
    delivery: DeliveryReport | None = field(default=None, compare=False)


class FeedbackService:
    """Runs retrieve -> analyze -> generate -> deliver for one channel at a time."""

    def __init__(
        self,
        source: ChannelSource,
        backend: Backend,
        adapter: Adapter,
        run_dir: str | Path,
        feedback: FeedbackConfig | None = None,
        policy: BackendPolicy | None = None,
        clock: Clock | None = None,
        sleep: Callable[[float], None] = time.sleep,
        analyze: Callable[[Transcript], MetricBundle] = analyze,
    ) -> None:
        self.analyze = analyze
        self.source = source
        self.backend = backend
        self.adapter = adapter
        self.run_dir = Path(run_dir)
        self.feedback = feedback or FeedbackConfig()
        self.policy = policy or BackendPolicy()
        self.clock = clock or SystemClock()
        self.sleep = sleep
        self.watermarks = WatermarkStore(self.run_dir / "watermarks.json")
        self.ledger = IdempotencyLedger(self.run_dir / "delivered.json")
        self.events = EventLog(self.run_dir / "events.jsonl")

    def run_cycle(self, channel_id: str) -> CycleOutcome:
        mark = self.watermarks.get(channel_id)
        full = self.source.fetch(channel_id, mark)
        fresh = full.after(mark)
        if fresh is None:
            self.events.emit("cycle", self.clock.now(), channel_id=channel_id, status="skipped")
            return CycleOutcome(channel_id, "skipped", detail="no new messages since watermark")
        cycle_id = f"{channel_id}-{fresh.end.strftime('%Y%m%dT%H%M%S%fZ')}"
        bundle = self.analyze(fresh)
        cycle = generate_feedback(fresh, bundle, self.backend, self.feedback, self.policy, self.sleep)
        cycle.write_report(self.run_dir / "cycles" / f"{cycle_id}.json", cycle_id)
        routing = Routing(channel_id, fresh.member_ids)
        report = deliver(cycle.deliverable(), routing, self.adapter, cycle_id, self.ledger)
        for rec in report.records:
            self.events.emit(
                "delivery", self.clock.now(), cycle_id=cycle_id, channel_id=channel_id, kind="feedback", **_rec(rec)
            )
        delivered = [r for r in report.records if r.status in ("ok", "duplicate")]
        expected = len(fresh.member_ids) + 1
        if not delivered:
            status = "failed"
        elif len(delivered) == expected:
            status = "delivered"
        else:
            status = "partial"
        if delivered:
            self.watermarks.advance(channel_id, fresh.end)
        detail = "; ".join(f"{tag}: {err}" for tag, err in cycle.failures.items())
        self.events.emit(
            "cycle",
            self.clock.now(),
            channel_id=channel_id,
            cycle_id=cycle_id,
            status=status,
            failures=cycle.failures,
            invalid=[m.request_tag for m in cycle.messages if not m.valid],
        )
        return CycleOutcome(channel_id, status, cycle_id, detail, report)

    def tick(self, channels: tuple[str, ...], max_parallel: int = 4) -> list[CycleOutcome]:
        """One pass over ``channels``; a failing channel never affects the others."""

        def safe(channel_id: str) -> CycleOutcome:
            try:
                return self.run_cycle(channel_id)
            except Exception as exc:  # one channel must never stop the scheduler
                if isinstance(exc, TeamcoachError):
                    logger.error("cycle for %s failed: %s", channel_id, exc)
                else:
                    logger.exception("unexpected error in cycle for %s", channel_id)
                self.events.emit("cycle", self.clock.now(), channel_id=channel_id, status="failed", error=str(exc))
                return CycleOutcome(channel_id, "failed", detail=str(exc))

        with ThreadPoolExecutor(max_workers=max(1, max_parallel), thread_name_prefix="cycle") as pool:
            return list(pool.map(safe, channels))


def _rec(rec: DeliveryRecord) -> dict[str, Any]:
    d = rec.to_dict()
    d["target_kind"] = d.pop("target")["kind"]
    return d


def run_scheduled(
    schedule: Schedule,
    service: FeedbackService,
    max_ticks: int | None = None,
    on_tick: Callable[[int, list[CycleOutcome]], None] | None = None,
) -> int:
    """Run a tick at every interval until ``max_ticks`` ticks have run (forever if None).

    Returns the number of ticks run.
    """
    if not schedule.enabled:
        logger.info("schedule disabled; nothing to do")
        return 0
    clock = service.clock
    next_at = clock.now() + schedule.interval
    ticks = 0
    while max_ticks is None or ticks < max_ticks:
        clock.wait_until(next_at)
        stop = getattr(clock, "stop", None)
        if stop is not None and stop.is_set():
            break
        outcomes = service.tick(schedule.channels)
        ticks += 1
        if on_tick:
            on_tick(ticks, outcomes)
        next_at += schedule.interval
    return ticks
