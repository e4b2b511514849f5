"""Where a session gets each team's conversation and submission from.

:class:`SyntheticTeamSimulator` invents both, for simulated sessions.
:class:`WorkspaceTeamBehaviour` reads the real channel history and takes the
ranking from a file the facilitator drops into a submissions directory.
"""

from __future__ import annotations

import hashlib
import random
from datetime import datetime, timedelta
from pathlib import Path
from typing import Protocol

from teamcoach.orchestrator.sources import ChannelSource
from teamcoach.tasks import TaskDefinition
from teamcoach.transcript import EmptyTranscriptError, Member, Message, Transcript

_OPENERS = [
    "I think {a} should be near the top.",
    "What about {a}? It seems useful to me.",
    "I'd put {a} above {b}.",
    "We probably don't need {a} much.",
    "Agreed, {a} matters more than {b}.",
    "Good point, let's keep {a} high.",
    "Not sure about {a}, can someone explain?",
    "Let's move {b} lower, it is not that important.",
    "Great idea, {a} first then.",
    "Honestly {a} looks useless here.",
]


def _rng(*parts: object) -> random.Random:
    digest = hashlib.sha256("\0".join(map(str, parts)).encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


class TeamBehaviour(Protocol):
    def conversation(
        self,
        channel_id: str,
        members: tuple[str, ...],
        task: TaskDefinition,
        round_index: int,
        start: datetime,
        duration: timedelta,
    ) -> Transcript | None: ...

    def submission(self, channel_id: str, task: TaskDefinition, round_index: int) -> list[str] | None: ...


class SyntheticTeamSimulator:
    """Seeded chat and ranking generator.

    Each team talks about the task items with uneven participation, and
    submits the expert order perturbed by a few adjacent swaps. With
    ``missing_rate`` > 0 some rounds end without a submission.
    """

    def __init__(self, seed: int = 0, messages: tuple[int, int] = (8, 16), missing_rate: float = 0.0) -> None:
        self.seed = seed
        self.messages = messages
        self.missing_rate = missing_rate

    def conversation(
        self,
        channel_id: str,
        members: tuple[str, ...],
        task: TaskDefinition,
        round_index: int,
        start: datetime,
        duration: timedelta,
    ) -> Transcript:
        rng = _rng(self.seed, "chat", channel_id, round_index)
        weights = [rng.uniform(0.2, 1.0) for _ in members]
        n = rng.randint(*self.messages)
        span = duration.total_seconds()
        offsets = sorted(rng.uniform(0, span * 0.95) for _ in range(n))
        roster = tuple(Member(m, f"alias-{i + 1}") for i, m in enumerate(members))
        msgs = []
        for off in offsets:
            sender = rng.choices(roster, weights)[0]
            a, b = rng.sample(task.items, 2)
            text = rng.choice(_OPENERS).format(a=a, b=b)
            msgs.append(Message(sender.id, sender.alias, start + timedelta(seconds=round(off, 3)), text, channel_id))
        return Transcript(channel_id, task.scenario or task.title, roster, tuple(msgs))

    def submission(self, channel_id: str, task: TaskDefinition, round_index: int) -> list[str] | None:
        rng = _rng(self.seed, "rank", channel_id, round_index)
        if rng.random() < self.missing_rate:
            return None
        ranking = list(task.expert_ranking)
        for _ in range(rng.randint(0, 4)):
            i = rng.randrange(len(ranking) - 1)
            ranking[i], ranking[i + 1] = ranking[i + 1], ranking[i]
        return ranking


class WorkspaceTeamBehaviour:
    """Real teams: chat from a channel source, rankings from ``<dir>/<channel>-round-<n>.txt``.

    The submission file lists one item per line, best first. A missing file
    means the team did not submit.
    """

    def __init__(self, source: ChannelSource, submissions_dir: str | Path) -> None:
        self.source = source
        self.submissions_dir = Path(submissions_dir)

    def conversation(
        self,
        channel_id: str,
        members: tuple[str, ...],
        task: TaskDefinition,
        round_index: int,
        start: datetime,
        duration: timedelta,
    ) -> Transcript | None:
        try:
            return self.source.fetch(channel_id, start).after(start)
        except EmptyTranscriptError:
            return None

    def submission(self, channel_id: str, task: TaskDefinition, round_index: int) -> list[str] | None:
        path = self.submissions_dir / f"{channel_id}-round-{round_index + 1}.txt"
        if not path.exists():
            return None
        return [line.strip() for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
