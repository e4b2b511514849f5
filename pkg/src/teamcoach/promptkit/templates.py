"""Loading of the prompt template directory.

Layout::

    system.txt            system prompt shared by all requests
    ranking_eval.txt      ranking-evaluation prompt
    fragments/<name>.txt  reusable blocks; header lines "# kind: ..." and "# scope: team|member"
    team/p<cell>.txt      one file per grid cell; header lines "# cell", "# length", "# context",
    individual/p<cell>.txt  then one "{{> fragment}}" include per line

A directory with the same layout can replace the shipped templates.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import TYPE_CHECKING

from teamcoach.errors import ConfigError
from teamcoach.promptkit.specs import Audience, PromptSpec, grid

if TYPE_CHECKING:
    from importlib.abc import Traversable

BLOCK_KINDS = (
    "transcript",
    "metric-datum",
    "few-shot-examples",
    "explicit-judgment",
    "task-goal",
    "formatting-rules",
)
SCOPES = ("team", "member")

_HEADER = re.compile(r"^# (\w+): (.*)$")
_INCLUDE = re.compile(r"^\{\{> (\w+)\}\}$")


@dataclass(frozen=True)
class Fragment:
    name: str
    kind: str
    scope: str
    body: str


@dataclass(frozen=True)
class CellTemplate:
    template_id: str
    fragments: tuple[str, ...]


def _split_header(text: str) -> tuple[dict[str, str], list[str]]:
    header: dict[str, str] = {}
    lines = text.rstrip("\n").split("\n")
    i = 0
    while i < len(lines):
        m = _HEADER.match(lines[i])
        if not m:
            break
        header[m.group(1)] = m.group(2).strip()
        i += 1
    return header, lines[i:]


class TemplateRegistry:
    """Read-only set of templates, validated when loaded."""

    def __init__(self, root: str | Path | Traversable | None = None) -> None:
        if root is None:
            root = resources.files("teamcoach").joinpath("templates")
        elif isinstance(root, str):
            root = Path(root)
        self.root = root
        self.system_text = self._read("system.txt").strip()
        self.ranking_eval_text = self._read("ranking_eval.txt").strip()
        self.fragments: dict[str, Fragment] = {}
        self.cells: dict[str, CellTemplate] = {}
        for audience in (Audience.TEAM, Audience.INDIVIDUAL):
            for spec in grid(audience):
                self.cells[spec.template_id] = self._load_cell(spec)

    def _read(self, *parts: str) -> str:
        node = self.root
        for part in parts:
            node = node.joinpath(part)
        try:
            return node.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"missing template {'/'.join(parts)}: {exc}", field="prompts.template_dir") from exc

    def _fragment(self, name: str) -> Fragment:
        if name not in self.fragments:
            source = f"fragments/{name}.txt"
            header, body = _split_header(self._read("fragments", f"{name}.txt"))
            kind, scope = header.get("kind"), header.get("scope", "team")
            if kind not in BLOCK_KINDS:
                raise ConfigError(f"{source}: unknown block kind {kind!r}", field="prompts.template_dir")
            if scope not in SCOPES:
                raise ConfigError(f"{source}: unknown scope {scope!r}", field="prompts.template_dir")
            self.fragments[name] = Fragment(name, kind, scope, "\n".join(body).strip())
        return self.fragments[name]

    def _load_cell(self, spec: PromptSpec) -> CellTemplate:
        source = f"{spec.template_id}.txt"
        header, body = _split_header(self._read(spec.audience.value, f"p{spec.cell}.txt"))
        expected = {"cell": str(spec.cell), "length": spec.length.value, "context": spec.context_level.value}
        for key, value in expected.items():
            if header.get(key) != value:
                raise ConfigError(
                    f"{source}: header {key} is {header.get(key)!r}, expected {value!r}", field="prompts.template_dir"
                )
        names = []
        for line in body:
            if not line.strip():
                continue
            m = _INCLUDE.match(line.strip())
            if not m:
                raise ConfigError(f"{source}: expected a fragment include, got {line!r}", field="prompts.template_dir")
            names.append(self._fragment(m.group(1)).name)
        return CellTemplate(spec.template_id, tuple(names))

    def blocks_for(self, spec: PromptSpec) -> list[Fragment]:
        cell = self.cells[spec.template_id]
        return [self.fragments[name] for name in cell.fragments]


@lru_cache(maxsize=1)
def default_registry() -> TemplateRegistry:
    return TemplateRegistry()
