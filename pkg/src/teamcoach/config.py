"""YAML configuration with ``${VAR}`` environment interpolation.

Every section maps onto a dataclass; unknown keys and wrongly typed values
raise ConfigError naming the offending field (``llm.retries`` and so on).
Secrets are never stored in the file: backends read them from the
environment variables the config names.
"""

from __future__ import annotations

import dataclasses
import functools
import os
import re
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from datetime import timedelta
from pathlib import Path
from typing import Any

import yaml

from teamcoach.delivery import (
    Adapter,
    DryRunAdapter,
    MemoryAdapter,
    WebhookAdapter,
    WorkspaceApiAdapter,
)
from teamcoach.errors import ConfigError
from teamcoach.feedback import FeedbackConfig, MetricBundle, analyze
from teamcoach.llm import (
    DEFAULT_KEY_ENV,
    Backend,
    BackendPolicy,
    FixtureStore,
    HttpBackend,
    MockBackend,
    RecordingBackend,
    ReplayBackend,
)
from teamcoach.orchestrator.session import SessionPlan
from teamcoach.promptkit import JudgmentRule, PromptSpec, TemplateRegistry
from teamcoach.tasks import TaskDefinition, TaskError, get_task, load_tasks
from teamcoach.textmetrics import (
    SentimentAnalyzer,
    load_function_words,
    load_valence_lexicon,
)
from teamcoach.transcript import Transcript

_VAR = re.compile(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}")
BACKENDS = ("mock", "http", "replay")
ADAPTERS = ("dry-run", "webhook", "workspace-api", "memory")


@dataclass(frozen=True)
class LlmConfig:
    backend: str = "mock"
    endpoint: str = "https://api.openai.com/v1/chat/completions"
    model_id: str = "mock"
    api_key_env: str = DEFAULT_KEY_ENV
    seed: int = 0
    fixtures_dir: str = ""
    record: bool = False
    timeout_s: float = 120.0
    retries: int = 2
    backoff_s: float = 1.0
    max_concurrency: int = 4
    max_output_tokens: int = 2048
    temperature: float = 0.0

    def policy(self) -> BackendPolicy:
        return BackendPolicy(self.timeout_s, self.retries, self.backoff_s, 2.0, self.max_concurrency)


@dataclass(frozen=True)
class PromptConfig:
    template_dir: str = ""
    team_length: str = "long"
    team_context: str = "medium"
    individual_length: str = "medium"
    individual_context: str = "medium"
    judgments: tuple[Any, ...] = ()


@dataclass(frozen=True)
class LexiconConfig:
    function_words: str = ""
    valence: str = ""
    emoji: str = ""


@dataclass(frozen=True)
class DeliveryConfig:
    adapter: str = "dry-run"
    out_dir: str = "outbox"
    webhook_url: str = ""
    api_base: str = "https://slack.com/api"
    token_env: str = "TEAMCOACH_BOT_TOKEN"
    private_mode: str = "ephemeral"
    deliver_invalid: bool = False


@dataclass(frozen=True)
class ScheduleConfig:
    interval_minutes: float = 60.0
    channels: tuple[str, ...] = ()
    enabled: bool = True
    source: str = "directory"
    source_path: str = "transcripts"


@dataclass(frozen=True)
class AppConfig:
    llm: LlmConfig = field(default_factory=LlmConfig)
    prompts: PromptConfig = field(default_factory=PromptConfig)
    lexicons: LexiconConfig = field(default_factory=LexiconConfig)
    delivery: DeliveryConfig = field(default_factory=DeliveryConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    exclude_senders: tuple[str, ...] = ()
    session_plan: str = ""
    run_dir: str = "runs"
    base_dir: str = field(default=".", compare=False)

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else Path(self.base_dir) / p


def interpolate(value: Any, environ: Mapping[str, str], where: str = "") -> Any:
    if isinstance(value, str):

        def sub(m: re.Match[str]) -> str:
            name = m.group(1)
            if name not in environ:
                raise ConfigError(f"environment variable {name} is not set", field=where or name)
            return environ[name]

        return _VAR.sub(sub, value)
    if isinstance(value, dict):
        return {k: interpolate(v, environ, f"{where}.{k}" if where else str(k)) for k, v in value.items()}
    if isinstance(value, list):
        return [interpolate(v, environ, f"{where}[{i}]") for i, v in enumerate(value)]
    return value


def _coerce(value: Any, default: Any, where: str) -> Any:
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"expected true/false, got {value!r}", field=where)
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"expected an integer, got {value!r}", field=where)
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"expected a number, got {value!r}", field=where)
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, (str, int, float)) or isinstance(value, bool):
            raise ConfigError(f"expected a string, got {value!r}", field=where)
        return str(value)
    if isinstance(default, tuple):
        if not isinstance(value, list):
            raise ConfigError(f"expected a list, got {value!r}", field=where)
        return tuple(value)
    return value


def _section(cls: type, data: Any, where: str) -> Any:
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError("expected a mapping", field=where)
    defaults = cls()
    known = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in known:
            raise ConfigError("unknown setting", field=f"{where}.{key}")
        kwargs[key] = _coerce(value, getattr(defaults, key), f"{where}.{key}")
    return cls(**kwargs)


def _judgments(raw: tuple[Any, ...]) -> tuple[JudgmentRule, ...]:
    rules = []
    for i, item in enumerate(raw):
        where = f"prompts.judgments[{i}]"
        if not isinstance(item, dict):
            raise ConfigError("expected a mapping with name, metric, op, threshold, template", field=where)
        try:
            rules.append(
                JudgmentRule(
                    str(item["name"]), str(item["metric"]), str(item.get("op", "<")),
                    float(item["threshold"]), str(item["template"]),
                )
            )
        except KeyError as exc:
            raise ConfigError(f"missing key {exc.args[0]}", field=where) from exc
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc), field=where) from exc
    return tuple(rules)


def parse_config(doc: Any, environ: Mapping[str, str] | None = None, base_dir: str | Path = ".") -> AppConfig:
    environ = os.environ if environ is None else environ
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("top level must be a mapping", field="config")
    doc = interpolate(doc, environ)
    sections = {
        "llm": LlmConfig,
        "prompts": PromptConfig,
        "lexicons": LexiconConfig,
        "delivery": DeliveryConfig,
        "schedule": ScheduleConfig,
    }
    kwargs: dict[str, Any] = {"base_dir": str(base_dir)}
    for key, value in doc.items():
        if key in sections:
            kwargs[key] = _section(sections[key], value, key)
        elif key in ("exclude_senders",):
            kwargs[key] = _coerce(value, (), key)
        elif key in ("session_plan", "run_dir"):
            kwargs[key] = _coerce(value, "", key)
        else:
            raise ConfigError("unknown setting", field=key)
    cfg = AppConfig(**kwargs)
    validate(cfg)
    return cfg


def validate(cfg: AppConfig) -> None:
    if cfg.llm.backend not in BACKENDS:
        raise ConfigError(f"must be one of {', '.join(BACKENDS)}", field="llm.backend")
    if cfg.delivery.adapter not in ADAPTERS:
        raise ConfigError(f"must be one of {', '.join(ADAPTERS)}", field="delivery.adapter")
    if cfg.delivery.adapter == "webhook" and not cfg.delivery.webhook_url:
        raise ConfigError("required for the webhook adapter", field="delivery.webhook_url")
    if cfg.schedule.source not in ("directory", "workspace-api"):
        raise ConfigError("must be directory or workspace-api", field="schedule.source")
    if cfg.schedule.interval_minutes <= 0:
        raise ConfigError("must be positive", field="schedule.interval_minutes")
    cfg.llm.policy()
    for name in ("team", "individual"):
        for axis in ("length", "context"):
            key = f"{name}_{axis}"
            try:
                PromptSpec(name, **{"length" if axis == "length" else "context_level": getattr(cfg.prompts, key)})
            except ValueError as exc:
                raise ConfigError(str(exc), field=f"prompts.{key}") from exc
    _judgments(cfg.prompts.judgments)
    paths = {
        "prompts.template_dir": cfg.prompts.template_dir,
        "lexicons.function_words": cfg.lexicons.function_words,
        "lexicons.valence": cfg.lexicons.valence,
        "lexicons.emoji": cfg.lexicons.emoji,
        "session_plan": cfg.session_plan,
    }
    if cfg.llm.backend == "replay":
        if not cfg.llm.fixtures_dir:
            raise ConfigError("required for the replay backend", field="llm.fixtures_dir")
        paths["llm.fixtures_dir"] = cfg.llm.fixtures_dir
    for where, path in paths.items():
        if path and not cfg.resolve(path).exists():
            raise ConfigError(f"{path} does not exist", field=where)


def load_config(path: str | Path | None = None, environ: Mapping[str, str] | None = None) -> AppConfig:
    if path is None:
        return parse_config({}, environ)
    p = Path(path)
    try:
        doc = yaml.safe_load(p.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read {p}: {exc.strerror}", field="config") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}", field="config") from exc
    return parse_config(doc, environ, p.parent)


# -- builders ------------------------------------------------------------------


def build_backend(cfg: AppConfig, environ: Mapping[str, str] | None = None) -> Backend:
    llm = cfg.llm
    backend: Backend
    if llm.backend == "mock":
        backend = MockBackend(llm.seed)
    elif llm.backend == "replay":
        return ReplayBackend(FixtureStore(cfg.resolve(llm.fixtures_dir)))
    else:
        backend = HttpBackend(llm.endpoint, llm.api_key_env, environ)
    if llm.record:
        if not llm.fixtures_dir:
            raise ConfigError("required when recording", field="llm.fixtures_dir")
        backend = RecordingBackend(backend, FixtureStore(cfg.resolve(llm.fixtures_dir)))
    return backend


def build_adapter(cfg: AppConfig, environ: Mapping[str, str] | None = None) -> Adapter:
    d = cfg.delivery
    if d.adapter == "dry-run":
        return DryRunAdapter(cfg.resolve(d.out_dir))
    if d.adapter == "memory":
        return MemoryAdapter()
    if d.adapter == "webhook":
        return WebhookAdapter(d.webhook_url)
    return WorkspaceApiAdapter(d.api_base, d.token_env, d.private_mode, environ)


def feedback_config(cfg: AppConfig) -> FeedbackConfig:
    p = cfg.prompts
    registry = TemplateRegistry(cfg.resolve(p.template_dir)) if p.template_dir else None
    return FeedbackConfig(
        team_spec=PromptSpec("team", p.team_length, p.team_context),
        individual_spec=PromptSpec("individual", p.individual_length, p.individual_context),
        model_id=cfg.llm.model_id,
        max_output_tokens=cfg.llm.max_output_tokens,
        temperature=cfg.llm.temperature,
        rules=_judgments(p.judgments) or None,
        deliver_invalid=cfg.delivery.deliver_invalid,
        registry=registry,
    )


def analyzer(cfg: AppConfig) -> Callable[[Transcript], MetricBundle]:
    lex = cfg.lexicons
    if not (lex.function_words or lex.valence or lex.emoji):
        return analyze
    fw = load_function_words(cfg.resolve(lex.function_words)) if lex.function_words else None
    sentiment = None
    if lex.valence or lex.emoji:
        sentiment = SentimentAnalyzer(
            load_valence_lexicon(
                cfg.resolve(lex.valence) if lex.valence else None, cfg.resolve(lex.emoji) if lex.emoji else None
            )
        )
    return functools.partial(analyze, function_words=fw, analyzer=sentiment)


def schedule_interval(cfg: AppConfig) -> timedelta:
    return timedelta(minutes=cfg.schedule.interval_minutes)


# -- session plans ---------------------------------------------------------------

_PLAN_KEYS = frozenset(
    "participants team_size tasks task_file round_minutes feedback_minutes treatment_teams "
    "conditions remainder seed ranking_eval channels".split()
)


def parse_session_plan(doc: Any, base_dir: str | Path = ".") -> SessionPlan:
    """Build a SessionPlan from a parsed plan file.

    ``participants`` is either a list of ids or a count (ids ``P01``, ``P02``...).
    ``tasks`` lists built-in or ``task_file`` task ids, one per round.
    """
    if not isinstance(doc, dict):
        raise ConfigError("plan must be a mapping", field="session")
    for key in doc:
        if key not in _PLAN_KEYS:
            raise ConfigError("unknown setting", field=f"session.{key}")
    raw = doc.get("participants")
    if isinstance(raw, bool) or raw is None:
        raise ConfigError("required: a count or a list of ids", field="session.participants")
    if isinstance(raw, int):
        participants = tuple(f"P{i + 1:02d}" for i in range(raw))
    elif isinstance(raw, list):
        participants = tuple(str(p) for p in raw)
    else:
        raise ConfigError("expected a count or a list of ids", field="session.participants")
    extra: list[TaskDefinition] = []
    if doc.get("task_file"):
        path = Path(base_dir) / str(doc["task_file"])
        if not path.exists():
            raise ConfigError(f"{path} does not exist", field="session.task_file")
        extra = load_tasks(path)
    try:
        rounds = tuple(get_task(str(t), extra) for t in doc.get("tasks", ["canada", "ocean", "moon"]))
    except TaskError as exc:
        raise ConfigError(str(exc), field="session.tasks") from exc

    def num(key: str, default: Any, kind: type) -> Any:
        value = doc.get(key, default)
        if value is None and default is None:
            return None
        wrong_type = not isinstance(value, int if kind is int else (int, float))
        if isinstance(value, bool) or wrong_type:
            raise ConfigError(f"expected a number, got {value!r}", field=f"session.{key}")
        return kind(value)

    try:
        return SessionPlan(
            participants=participants,
            rounds=rounds,
            team_size=num("team_size", 3, int),
            conditions=tuple(doc.get("conditions", ())),
            treatment_teams=num("treatment_teams", None, int),
            round_duration=timedelta(minutes=num("round_minutes", 10, float)),
            feedback_window=timedelta(minutes=num("feedback_minutes", 3, float)),
            remainder=str(doc.get("remainder", "reject")),
            seed=num("seed", 0, int),
            ranking_eval=bool(doc.get("ranking_eval", False)),
            channels=tuple(str(c) for c in doc.get("channels", ())),
        )
    except ValueError as exc:
        raise ConfigError(str(exc), field="session.conditions") from exc


def load_session_plan(path: str | Path, environ: Mapping[str, str] | None = None) -> SessionPlan:
    p = Path(path)
    try:
        doc = yaml.safe_load(p.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read {p}: {exc.strerror}", field="session_plan") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}", field="session_plan") from exc
    return parse_session_plan(interpolate(doc, os.environ if environ is None else environ), p.parent)
