"""Splitting model output into the expected feedback sections.

A heading is a line starting with ``>`` or ``#``, a short line that is
entirely emphasised (``**Key Strengths**``), or a short plain line ending in
a colon. Heading candidates that name no known section are kept as body text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

SUMMARY = "summary"
STRENGTHS = "strengths"
IMPROVEMENTS = "improvements"
ACTIONABLE = "actionable"
MERGED = "improvements+actionable"
SECTION_KEYS = (SUMMARY, STRENGTHS, IMPROVEMENTS, ACTIONABLE)

_QUOTE = re.compile(r"^\s*>+\s*(.+?)\s*$")
_HASH = re.compile(r"^\s*#{1,6}\s+(.+?)\s*#*\s*$")
_EMPH = re.compile(r"^\s*(\*\*|__|\*|_)(?P<t>[^*_].*?)\1\s*:?\s*$")
_COLON = re.compile(r"^\s*(?P<t>[A-Za-z][\w ,&/'()-]{0,60}):\s*$")
_MAX_HEADING_WORDS = 10


@dataclass(frozen=True)
class Section:
    key: str
    heading: str
    body: str


@dataclass(frozen=True)
class SectionParse:
    sections: tuple[Section, ...]
    violations: tuple[str, ...]

    @property
    def valid(self) -> bool:
        return not self.violations

    def keys(self) -> list[str]:
        return [s.key for s in self.sections]


def classify_heading(text: str) -> str | None:
    t = text.casefold()
    action = "action" in t or "next step" in t or "recommendation" in t
    improve = "improv" in t or "growth" in t or "development" in t
    if action and improve:
        return MERGED
    if action:
        return ACTIONABLE
    if improve:
        return IMPROVEMENTS
    if "strength" in t:
        return STRENGTHS
    if "summary" in t or "contribution" in t or "goal" in t or "overview" in t:
        return SUMMARY
    return None


def _heading(line: str) -> str | None:
    for pattern in (_QUOTE, _HASH, _EMPH, _COLON):
        m = pattern.match(line)
        if m:
            text = m.groupdict().get("t") or m.group(1)
            text = text.strip().strip("*_").strip().rstrip(":").strip()
            if text and len(text.split()) <= _MAX_HEADING_WORDS:
                return text
    return None


def split_sections(raw: str) -> list[Section]:
    sections: list[Section] = []
    heading: str | None = None
    key = ""
    body: list[str] = []

    def flush() -> None:
        if heading is not None:
            sections.append(Section(key, heading, "\n".join(body).strip()))

    for line in raw.splitlines():
        text = _heading(line)
        found = classify_heading(text) if text else None
        if found is None:
            body.append(line)
            continue
        flush()
        heading, key, body = text, found, []
    flush()
    return sections


def validate_sections(raw: str, audience: str) -> SectionParse:
    """Parse ``raw`` and check it against the section contract for ``audience``.

    Individual feedback needs all four sections. Team feedback needs a
    summary, strengths, and improvement or actionable content, which may be
    one merged section or two. Violations read ``missing: <key>``,
    ``duplicate: <key>`` or ``empty: <key>``.
    """
    sections = split_sections(raw)
    violations: list[str] = []
    seen: list[str] = []
    for s in sections:
        if s.key in seen:
            violations.append(f"duplicate: {s.key}")
        seen.append(s.key)
        if not s.body:
            violations.append(f"empty: {s.key}")
    present = set(seen)
    if MERGED in present:
        present |= {IMPROVEMENTS, ACTIONABLE}
    if audience == "team":
        required = [SUMMARY, STRENGTHS]
        missing = [k for k in required if k not in present]
        if not present & {IMPROVEMENTS, ACTIONABLE}:
            missing.append(IMPROVEMENTS)
    else:
        if MERGED in seen:
            violations.append(f"merged: {MERGED}")
        missing = [k for k in SECTION_KEYS if k not in present]
    violations.extend(f"missing: {k}" for k in missing)
    return SectionParse(tuple(sections), tuple(violations))
