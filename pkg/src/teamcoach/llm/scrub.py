"""Keeps credentials out of log output."""

from __future__ import annotations

import logging
import re
import threading

_BEARER = re.compile(r"(Bearer\s+)[^\s'\"]+", re.IGNORECASE)
_TOKEN = re.compile(r"\b(xox[abpr]-|sk-)[A-Za-z0-9_\-]{6,}")
REDACTED = "[REDACTED]"


class CredentialScrubber(logging.Filter):
    """Rewrites records so that registered secrets and bearer tokens never appear."""

    def __init__(self) -> None:
        super().__init__()
        self._secrets: set[str] = set()
        self._lock = threading.Lock()

    def register(self, secret: str) -> None:
        if secret:
            with self._lock:
                self._secrets.add(secret)

    def scrub(self, text: str) -> str:
        with self._lock:
            secrets = sorted(self._secrets, key=len, reverse=True)
        for s in secrets:
            text = text.replace(s, REDACTED)
        text = _BEARER.sub(r"\1" + REDACTED, text)
        return _TOKEN.sub(REDACTED, text)

    def filter(self, record: logging.LogRecord) -> bool:
        message = record.getMessage()
        clean = self.scrub(message)
        if clean != message or record.args:
            record.msg = clean
            record.args = None
        return True


scrubber = CredentialScrubber()


def install(logger_name: str = "teamcoach") -> CredentialScrubber:
    """Attach the shared scrubber to ``logger_name`` and to every root handler."""
    log = logging.getLogger(logger_name)
    if scrubber not in log.filters:
        log.addFilter(scrubber)
    for handler in logging.getLogger().handlers:
        if scrubber not in handler.filters:
            handler.addFilter(scrubber)
    return scrubber
