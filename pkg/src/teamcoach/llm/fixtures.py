"""Record/replay of backend responses, one JSON file per request hash."""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

from teamcoach.llm.core import (
    Backend,
    CompletionRequest,
    LlmError,
    RawCompletion,
    Usage,
)


class FixtureMissingError(LlmError):
    pass


class FixtureStore:
    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)

    def path(self, req: CompletionRequest) -> Path:
        return self.root / f"{req.digest()}.json"

    def save(self, req: CompletionRequest, raw: RawCompletion) -> Path:
        self.root.mkdir(parents=True, exist_ok=True)
        doc = {
            "request": {"digest": req.digest(), "tag": req.request_tag, "model_id": req.model_id},
            "response": {
                "text": raw.text,
                "backend": raw.backend,
                "usage": {"prompt_tokens": raw.usage.prompt_tokens, "completion_tokens": raw.usage.completion_tokens},
            },
        }
        target = self.path(req)
        fd, tmp = tempfile.mkstemp(dir=self.root, suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, ensure_ascii=False)
        os.replace(tmp, target)
        return target

    def load(self, req: CompletionRequest) -> RawCompletion:
        p = self.path(req)
        try:
            doc = json.loads(p.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise FixtureMissingError(f"no recorded response for {req.request_tag} ({p.name})") from None
        resp = doc["response"]
        usage = resp.get("usage", {})
        return RawCompletion(resp["text"], Usage(usage.get("prompt_tokens", 0), usage.get("completion_tokens", 0)), "replay")


class RecordingBackend:
    def __init__(self, inner: Backend, store: FixtureStore) -> None:
        self.inner = inner
        self.store = store
        self.name = inner.name

    def send(self, req: CompletionRequest, timeout_s: float) -> RawCompletion:
        raw = self.inner.send(req, timeout_s)
        self.store.save(req, raw)
        return raw


class ReplayBackend:
    """Answers only from recorded fixtures; never touches the network."""

    name = "replay"

    def __init__(self, store: FixtureStore) -> None:
        self.store = store

    def send(self, req: CompletionRequest, timeout_s: float) -> RawCompletion:
        return self.store.load(req)
