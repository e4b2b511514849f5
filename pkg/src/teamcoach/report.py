"""Metrics tables and figures for one or more transcripts.

``write_report`` produces ``metrics.csv`` (one row per member) and three
PNG figures next to it: word share per member, language style matching per
member, and per-message sentiment over the conversation.
"""

from __future__ import annotations

import csv
import logging
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

from matplotlib.axes import Axes  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402

from teamcoach.feedback import MetricBundle, analyze  # noqa: E402
from teamcoach.textmetrics import sentiment  # noqa: E402
from teamcoach.transcript import Transcript  # noqa: E402

logger = logging.getLogger(__name__)

CSV_COLUMNS = (
    "channel_id",
    "member_id",
    "alias",
    "words",
    "word_share",
    "messages",
    "turns",
    "compound",
    "lsm",
    "team_compound",
    "duration_minutes",
)

_RC = {
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
}


@dataclass(frozen=True)
class ReportFiles:
    csv: Path
    figures: tuple[Path, ...]


def metric_rows(items: Sequence[tuple[Transcript, MetricBundle]]) -> list[dict[str, object]]:
    rows = []
    for t, m in items:
        for member_id, alias in m.members.items():
            rows.append(
                {
                    "channel_id": t.channel_id,
                    "member_id": member_id,
                    "alias": alias,
                    "words": m.engagement.word_counts[member_id],
                    "word_share": round(m.engagement.ratios[member_id], 6),
                    "messages": m.flow.messages[member_id],
                    "turns": m.flow.turns[member_id],
                    "compound": round(m.member_sentiment[member_id].compound, 6),
                    "lsm": round(m.lsm[member_id].overall, 6),
                    "team_compound": round(m.team_sentiment.compound, 6),
                    "duration_minutes": round(m.flow.duration_minutes, 3),
                }
            )
    return rows


def write_csv(rows: Sequence[dict[str, object]], path: Path, delimiter: str = ",") -> Path:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, delimiter=delimiter)
        writer.writeheader()
        writer.writerows(rows)
    return path


def _grouped_bars(ax: Axes, items: Sequence[tuple[Transcript, MetricBundle]], values: str) -> None:
    labels, heights, colors = [], [], []
    palette = matplotlib.colormaps["tab10"]
    for i, (t, m) in enumerate(items):
        for member_id, alias in m.members.items():
            labels.append(f"{t.channel_id}\n{alias}" if len(items) > 1 else alias)
            if values == "share":
                heights.append(m.engagement.ratios[member_id] * 100)
            else:
                heights.append(m.lsm[member_id].overall)
            colors.append(palette(i % 10))
    ax.bar(range(len(heights)), heights, color=colors)
    ax.set_xticks(range(len(labels)), labels, rotation=90 if len(labels) > 12 else 0)


def _save(fig: Figure, path: Path) -> Path:
    fig.savefig(path, bbox_inches="tight")
    return path


def plot_participation(items: Sequence[tuple[Transcript, MetricBundle]], path: Path) -> Path:
    with matplotlib.rc_context(_RC):
        fig = Figure(figsize=(max(4.0, 0.5 * sum(len(m.members) for _, m in items)), 3.0))
        ax = fig.add_subplot()
        _grouped_bars(ax, items, "share")
        sizes = {len(m.members) for _, m in items}
        if len(sizes) == 1:
            ax.axhline(100 / sizes.pop(), color="0.4", linewidth=0.8, linestyle="--", label="equal share")
            ax.legend(frameon=False, loc="upper left", bbox_to_anchor=(1.0, 1.0))
        ax.set_ylabel("share of words (%)")
        ax.set_title("Participation")
        return _save(fig, path)


def plot_lsm(items: Sequence[tuple[Transcript, MetricBundle]], path: Path, threshold: float = 0.5) -> Path:
    with matplotlib.rc_context(_RC):
        fig = Figure(figsize=(max(4.0, 0.5 * sum(len(m.members) for _, m in items)), 3.0))
        ax = fig.add_subplot()
        _grouped_bars(ax, items, "lsm")
        ax.axhline(threshold, color="0.4", linewidth=0.8, linestyle="--", label=f"judgment threshold {threshold}")
        ax.set_ylim(0, 1)
        ax.set_ylabel("LSM (member vs team)")
        ax.set_title("Language style matching")
        ax.legend(frameon=False, loc="upper left", bbox_to_anchor=(1.0, 1.0))
        return _save(fig, path)


def plot_sentiment(items: Sequence[tuple[Transcript, MetricBundle]], path: Path) -> Path:
    with matplotlib.rc_context(_RC):
        fig = Figure(figsize=(6.0, 3.0))
        ax = fig.add_subplot()
        for t, _ in items:
            xs = [(msg.timestamp - t.start).total_seconds() / 60 for msg in t.messages]
            ys = [sentiment(msg.text).compound for msg in t.messages]
            ax.plot(xs, ys, marker="o", markersize=2.5, linewidth=0.8, label=t.channel_id)
        ax.axhline(0, color="0.6", linewidth=0.6)
        ax.set_ylim(-1.05, 1.05)
        ax.set_xlabel("minutes since first message")
        ax.set_ylabel("compound sentiment")
        ax.set_title("Message sentiment")
        if len(items) <= 10:
            ax.legend(frameon=False, fontsize=7, loc="upper left", bbox_to_anchor=(1.0, 1.0))
        return _save(fig, path)


def write_report(transcripts: Sequence[Transcript], out_dir: str | Path, delimiter: str = ",") -> ReportFiles:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    items = [(t, analyze(t)) for t in transcripts]
    table = write_csv(metric_rows(items), out / "metrics.csv", delimiter)
    figures = (
        plot_participation(items, out / "participation.png"),
        plot_lsm(items, out / "lsm.png"),
        plot_sentiment(items, out / "sentiment.png"),
    )
    logger.info("report written to %s", out)
    return ReportFiles(table, figures)
