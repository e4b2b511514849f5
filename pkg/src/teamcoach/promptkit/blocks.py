from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ContextBlock:
    """One rendered piece of a prompt.

    ``scope`` is "team" for blocks shared by every prompt of a cycle, or the
    member id a block was rendered for.
    """

    kind: str
    payload: str
    scope: str = "team"
    name: str = ""
