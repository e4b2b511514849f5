"""``teamcoach`` command line.

Exit codes: 0 success, 1 pipeline failure (backend, delivery, invalid
feedback), 2 usage or configuration error (including unreadable inputs).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections.abc import Sequence
from dataclasses import asdict, replace
from pathlib import Path
from typing import Any

from teamcoach import __version__
from teamcoach.config import (
    AppConfig,
    analyzer,
    build_adapter,
    build_backend,
    feedback_config,
    load_config,
    load_session_plan,
    schedule_interval,
)
from teamcoach.delivery import DryRunAdapter, MemoryAdapter, Routing, deliver
from teamcoach.errors import ConfigError, TeamcoachError
from teamcoach.feedback import generate_feedback
from teamcoach.llm import (
    RANKING_TAG,
    CompletionRequest,
    FixtureStore,
    LlmError,
    MockBackend,
    RecordingBackend,
    ReplayBackend,
    complete,
)
from teamcoach.llm.scrub import install as install_scrubber
from teamcoach.orchestrator import (
    DirectorySource,
    EventLog,
    FeedbackService,
    Schedule,
    SessionError,
    SessionRunner,
    SimulatedClock,
    SyntheticTeamSimulator,
    SystemClock,
    WorkspaceApiSource,
    WorkspaceTeamBehaviour,
    assemble_teams,
    condition_violations,
    run_scheduled,
)
from teamcoach.promptkit import (
    Audience,
    ContextLevel,
    Length,
    PromptSpec,
    render_individual_prompt,
    render_ranking_eval_prompt,
    render_team_prompt,
)
from teamcoach.tasks import (
    RankingSubmission,
    TaskError,
    builtin_tasks,
    get_task,
    score_ranking,
    validate_submission,
)
from teamcoach.transcript import Transcript, TranscriptError, load_transcript

logger = logging.getLogger("teamcoach.cli")

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2


class UsageError(TeamcoachError):
    pass


def _load(path: str, cfg: AppConfig, fmt: str | None = None) -> Transcript:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"{path}: no such file or directory")
    return load_transcript(p, fmt, cfg.exclude_senders)


def _print_json(doc: Any) -> None:
    print(json.dumps(doc, indent=2, ensure_ascii=False, sort_keys=False))


# -- analyze -------------------------------------------------------------------


def cmd_analyze(args: argparse.Namespace, cfg: AppConfig) -> int:
    t = _load(args.transcript, cfg, args.format)
    bundle = analyzer(cfg)(t)
    doc: dict[str, Any] = {"channel_id": t.channel_id, **bundle.to_dict()}
    if args.member:
        mid = t.resolve_member(args.member)
        doc = {
            "channel_id": t.channel_id,
            "member_id": mid,
            "alias": bundle.members[mid],
            "words": bundle.engagement.word_counts[mid],
            "word_share": bundle.engagement.ratios[mid],
            "sentiment": asdict(bundle.member_sentiment[mid]),
            "lsm": {"overall": bundle.lsm[mid].overall, "categories": dict(bundle.lsm[mid].categories)},
            "messages": bundle.flow.messages[mid],
            "turns": bundle.flow.turns[mid],
        }
    _print_json(doc)
    return EXIT_OK


# -- feedback ------------------------------------------------------------------


def _feedback_backend(args: argparse.Namespace, cfg: AppConfig):
    if args.replay:
        if not Path(args.replay).is_dir():
            raise UsageError(f"{args.replay}: fixture directory not found")
        backend = ReplayBackend(FixtureStore(args.replay))
    elif args.live:
        backend = build_backend(replace(cfg, llm=replace(cfg.llm, backend="http", record=False)))
    elif args.mock:
        backend = MockBackend(args.seed if args.seed is not None else cfg.llm.seed)
    else:
        backend = build_backend(cfg)
    if args.record:
        backend = RecordingBackend(backend, FixtureStore(args.record))
    return backend


def _specs(args: argparse.Namespace, cfg: AppConfig):
    fc = feedback_config(cfg)
    team, ind = fc.team_spec, fc.individual_spec
    if args.length or args.context:
        team = PromptSpec(Audience.TEAM, args.length or team.length, args.context or team.context_level)
        ind = PromptSpec(Audience.INDIVIDUAL, args.length or ind.length, args.context or ind.context_level)
    return replace(fc, team_spec=team, individual_spec=ind)


def cmd_feedback(args: argparse.Namespace, cfg: AppConfig) -> int:
    t = _load(args.transcript, cfg, args.format)
    backend = _feedback_backend(args, cfg)
    fc = _specs(args, cfg)
    run_dir = Path(args.run_dir or cfg.resolve(cfg.run_dir))
    cycle = generate_feedback(t, analyzer(cfg)(t), backend, fc, cfg.llm.policy())
    out = run_dir / "messages"
    out.mkdir(parents=True, exist_ok=True)
    for msg in cycle.messages:
        name = msg.request_tag.replace(":", "-")
        (out / f"{name}.md").write_text(msg.raw.rstrip() + "\n", encoding="utf-8")
    cycle_id = f"{t.channel_id}-{t.end.strftime('%Y%m%dT%H%M%SZ')}"
    cycle.write_report(run_dir / "report.json", cycle_id)
    ok = cycle.complete
    if args.deliver:
        adapter = DryRunAdapter(run_dir / "outbox") if cfg.delivery.adapter == "dry-run" else build_adapter(cfg)
        report = deliver(cycle.deliverable(), Routing(t.channel_id, t.member_ids), adapter, cycle_id)
        ok = ok and not report.failed
        for rec in report.records:
            print(f"delivered\t{rec.audience}\t{rec.target.kind.value}\t{rec.status}")
    for msg in cycle.messages:
        state = "valid" if msg.valid else "invalid: " + ", ".join(msg.violations)
        print(f"{msg.request_tag}\t{msg.word_count} words\t{state}")
    for tag, err in cycle.failures.items():
        print(f"{tag}\tfailed\t{err}")
    print(f"run directory: {run_dir}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAILURE


# -- prompt --------------------------------------------------------------------


def cmd_prompt(args: argparse.Namespace, cfg: AppConfig) -> int:
    t = _load(args.transcript, cfg, args.format)
    fc = feedback_config(cfg)
    bundle = analyzer(cfg)(t)
    if args.audience == "team":
        spec = PromptSpec(Audience.TEAM, args.length or fc.team_spec.length, args.context or fc.team_spec.context_level)
        rendered = render_team_prompt(t, bundle, spec, fc.rules, fc.registry)
    else:
        if not args.member:
            raise UsageError("--member is required for individual prompts")
        base = fc.individual_spec
        spec = PromptSpec(Audience.INDIVIDUAL, args.length or base.length, args.context or base.context_level)
        rendered = render_individual_prompt(t, args.member, bundle, spec, fc.rules, fc.registry)
    if args.json:
        _print_json(
            {
                "template_id": spec.template_id,
                "system": rendered.system_text,
                "user": rendered.user_text,
                "substitutions": rendered.substitutions,
                "blocks": [b.kind for b in rendered.blocks],
            }
        )
    else:
        print(rendered.user_text, end="")
    return EXIT_OK


# -- score / tasks -------------------------------------------------------------


def cmd_score(args: argparse.Namespace, cfg: AppConfig) -> int:
    task = get_task(args.task)
    items = list(args.items)
    if args.ranking_file:
        p = Path(args.ranking_file)
        if not p.exists():
            raise UsageError(f"{p}: no such file")
        items += [line.strip() for line in p.read_text(encoding="utf-8").splitlines() if line.strip()]
    checked = validate_submission(task, items)
    if not isinstance(checked, RankingSubmission):
        for v in checked:
            print(v, file=sys.stderr)
        return EXIT_USAGE
    score = score_ranking(task, checked)
    if args.json:
        _print_json(
            {
                "task_id": task.task_id,
                "score": score.display(),
                "score_fraction": str(score.score),
                "dist_expert": score.dist_expert,
                "dist_worst": score.dist_worst,
            }
        )
    else:
        print(score.display())
    if args.explain:
        prompt = render_ranking_eval_prompt(task, checked, score)
        req = CompletionRequest(prompt.system_text, prompt.user_text, request_tag=RANKING_TAG)
        print(complete(MockBackend(cfg.llm.seed) if cfg.llm.backend == "mock" else build_backend(cfg), req).text)
    return EXIT_OK


def cmd_tasks(args: argparse.Namespace, cfg: AppConfig) -> int:
    tasks = [get_task(args.task_id)] if args.task_id else builtin_tasks()
    if args.json:
        _print_json(
            [
                {"task_id": t.task_id, "title": t.title, "items": list(t.items), "expert_ranking": list(t.expert_ranking)}
                for t in tasks
            ]
        )
        return EXIT_OK
    for t in tasks:
        print(f"{t.task_id}\t{t.title}")
        if args.task_id:
            print(t.scenario)
            for i, item in enumerate(t.expert_ranking, 1):
                print(f"  {i}. {item}")
    return EXIT_OK


# -- serve / session -----------------------------------------------------------


def _source(cfg: AppConfig):
    if cfg.schedule.source == "workspace-api":
        return WorkspaceApiSource(cfg.delivery.api_base, cfg.delivery.token_env, cfg.exclude_senders)
    return DirectorySource(cfg.resolve(cfg.schedule.source_path), cfg.exclude_senders)


def cmd_serve(args: argparse.Namespace, cfg: AppConfig) -> int:
    channels = tuple(args.channel) or cfg.schedule.channels
    if not channels:
        raise ConfigError("no channels to watch", field="schedule.channels")
    run_dir = Path(args.run_dir or cfg.resolve(cfg.run_dir))
    service = FeedbackService(
        _source(cfg), build_backend(cfg), build_adapter(cfg), run_dir, feedback_config(cfg), cfg.llm.policy(),
        SystemClock(), analyze=analyzer(cfg),
    )
    if args.once:
        outcomes = service.tick(channels)
        for o in outcomes:
            print(f"{o.channel_id}\t{o.status}\t{o.detail}")
        return EXIT_OK if all(o.status in ("delivered", "skipped") for o in outcomes) else EXIT_FAILURE
    schedule = Schedule(schedule_interval(cfg), channels, cfg.schedule.enabled)

    def report(n: int, outcomes: list) -> None:
        for o in outcomes:
            logger.info("tick %d: %s %s %s", n, o.channel_id, o.status, o.detail)

    try:
        run_scheduled(schedule, service, args.ticks, report)
    except KeyboardInterrupt:
        logger.info("stopped")
    return EXIT_OK


def cmd_session(args: argparse.Namespace, cfg: AppConfig) -> int:
    plan_path = args.plan or (str(cfg.resolve(cfg.session_plan)) if cfg.session_plan else "")
    if not plan_path:
        raise UsageError("no session plan given")
    if not Path(plan_path).exists():
        raise UsageError(f"{plan_path}: no such file")
    plan = load_session_plan(plan_path)
    if args.seed is not None:
        plan = replace(plan, seed=args.seed)
    run_dir = Path(args.run_dir or cfg.resolve(cfg.run_dir))
    try:
        assignment = assemble_teams(plan.participants, plan)
    except SessionError as exc:
        raise UsageError(f"session plan: {exc}") from exc
    if args.simulated_clock:
        clock = SimulatedClock()
        behaviour = SyntheticTeamSimulator(plan.seed)
        adapter = DryRunAdapter(run_dir / "outbox") if cfg.delivery.adapter == "dry-run" else build_adapter(cfg)
        backend = MockBackend(cfg.llm.seed) if cfg.llm.backend == "mock" else build_backend(cfg)
    else:
        if not args.submissions:
            raise UsageError("--submissions DIR is required for a live session")
        clock = SystemClock()
        behaviour = WorkspaceTeamBehaviour(_source(cfg), args.submissions)
        adapter = build_adapter(cfg)
        backend = build_backend(cfg)
    if isinstance(adapter, MemoryAdapter):
        adapter = DryRunAdapter(run_dir / "outbox")
    events = EventLog(run_dir / "events.jsonl")
    runner = SessionRunner(
        plan, assignment, behaviour, backend, adapter, clock, events, feedback_config(cfg), cfg.llm.policy(),
        analyze=analyzer(cfg),
    )
    result = runner.run()
    for team in assignment.teams:
        scores = [s.score.display() if s.score else "-" for s in result.states if s.team_id == team.team_id]
        print(f"{team.team_id}\t{team.condition.value}\t{','.join(team.members)}\t" + "\t".join(scores))
    bad = condition_violations(events.events)
    failed = sum(len(r.failed) for r in result.deliveries)
    print(f"round states: {len(result.states)}; feedback deliveries failed: {failed}", file=sys.stderr)
    if bad:
        print(f"condition integrity violated by {len(bad)} deliveries", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK if not failed else EXIT_FAILURE


def cmd_report(args: argparse.Namespace, cfg: AppConfig) -> int:
    from teamcoach.report import write_report

    transcripts = [_load(p, cfg, args.format) for p in args.transcripts]
    files = write_report(transcripts, args.out, "\t" if args.tsv else ",")
    print(files.csv)
    for f in files.figures:
        print(f)
    return EXIT_OK


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="teamcoach", description="Team communication feedback engine.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--config", help="YAML configuration file")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = p.add_subparsers(dest="command", required=True)

    def transcript_args(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("transcript", help="transcript file or unpacked export directory")
        sp.add_argument("--format", choices=["canonical-json", "chat-export"], help="input format (auto-detected)")

    def grid_args(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--length", choices=[x.value for x in Length], help="target length of the feedback")
        sp.add_argument("--context", choices=[x.value for x in ContextLevel], help="how much context the prompt carries")

    a = sub.add_parser("analyze", help="print the communication metrics of a transcript as JSON")
    transcript_args(a)
    a.add_argument("--member", help="only this member (id or alias)")
    a.set_defaults(func=cmd_analyze)

    f = sub.add_parser("feedback", help="generate feedback messages for a transcript")
    transcript_args(f)
    mode = f.add_mutually_exclusive_group()
    mode.add_argument("--mock", action="store_true", help="use the deterministic offline backend")
    mode.add_argument("--replay", metavar="DIR", help="answer from recorded fixtures")
    mode.add_argument("--live", action="store_true", help="call the configured HTTP backend")
    f.add_argument("--record", metavar="DIR", help="record backend responses as fixtures")
    f.add_argument("--seed", type=int, help="mock backend seed")
    f.add_argument("--run-dir", help="where messages and the cycle report are written")
    f.add_argument("--deliver", action="store_true", help="deliver through the configured adapter")
    grid_args(f)
    f.set_defaults(func=cmd_feedback)

    pr = sub.add_parser("prompt", help="print a rendered prompt")
    transcript_args(pr)
    pr.add_argument("--audience", choices=["team", "individual"], default="team")
    pr.add_argument("--member", help="member id or alias (individual prompts)")
    pr.add_argument("--json", action="store_true")
    grid_args(pr)
    pr.set_defaults(func=cmd_prompt)

    s = sub.add_parser("score", help="score a ranking against the expert order")
    s.add_argument("--task", required=True, help="task id (see 'teamcoach tasks')")
    s.add_argument("items", nargs="*", help="items best first")
    s.add_argument("--ranking-file", help="file with one item per line, best first")
    s.add_argument("--explain", action="store_true", help="also print a ranking evaluation")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_score)

    t = sub.add_parser("tasks", help="list the survival tasks")
    t.add_argument("task_id", nargs="?")
    t.add_argument("--json", action="store_true")
    t.set_defaults(func=cmd_tasks)

    sv = sub.add_parser("serve", help="run feedback cycles on the configured schedule")
    sv.add_argument("--channel", action="append", default=[], help="channel to watch (repeatable)")
    sv.add_argument("--once", action="store_true", help="run a single tick now and exit")
    sv.add_argument("--ticks", type=int, help="stop after this many ticks")
    sv.add_argument("--run-dir")
    sv.set_defaults(func=cmd_serve)

    se = sub.add_parser("session", help="run the experiment-session protocol")
    se.add_argument("plan", nargs="?", help="session plan YAML")
    se.add_argument("--simulated-clock", action="store_true", help="simulated time and synthetic teams")
    se.add_argument("--submissions", help="directory of ranking files (live sessions)")
    se.add_argument("--seed", type=int, help="override the plan's seed")
    se.add_argument("--run-dir")
    se.set_defaults(func=cmd_session)

    r = sub.add_parser("report", help="write a metrics table and figures")
    r.add_argument("transcripts", nargs="+")
    r.add_argument("--format", choices=["canonical-json", "chat-export"])
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--tsv", action="store_true", help="tab-delimited table instead of CSV")
    r.set_defaults(func=cmd_report)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    install_scrubber()
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except (ConfigError, UsageError, TranscriptError, TaskError) as exc:
        print(f"teamcoach: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LlmError as exc:
        print(f"teamcoach: backend failure: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except TeamcoachError as exc:
        print(f"teamcoach: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
