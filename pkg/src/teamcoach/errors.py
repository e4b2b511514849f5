"""Exception hierarchy shared across the package."""

from __future__ import annotations


class TeamcoachError(Exception):
    """Base class for every error raised by teamcoach."""


class ConfigError(TeamcoachError):
    """Invalid or incomplete configuration.

    ``field`` names the offending configuration key when one applies.
    """

    def __init__(self, message: str, field: str | None = None) -> None:
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)
