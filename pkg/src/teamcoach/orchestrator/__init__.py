"""Running the agent: scheduled cycles and experiment sessions."""

from teamcoach.orchestrator.behaviour import (
    SyntheticTeamSimulator,
    TeamBehaviour,
    WorkspaceTeamBehaviour,
)
from teamcoach.orchestrator.clock import Clock, SimulatedClock, SystemClock
from teamcoach.orchestrator.events import EventLog, read_events
from teamcoach.orchestrator.scheduler import (
    CycleOutcome,
    FeedbackService,
    Schedule,
    run_scheduled,
)
from teamcoach.orchestrator.session import (
    LEGAL_TRANSITIONS,
    Condition,
    Phase,
    RoundState,
    SessionError,
    SessionPlan,
    SessionResult,
    SessionRunner,
    Team,
    TeamAssignment,
    assemble_teams,
    condition_violations,
)
from teamcoach.orchestrator.sources import (
    DirectorySource,
    SourceError,
    WatermarkStore,
    WorkspaceApiSource,
)

__all__ = [
    "LEGAL_TRANSITIONS",
    "Clock",
    "Condition",
    "CycleOutcome",
    "DirectorySource",
    "EventLog",
    "FeedbackService",
    "Phase",
    "RoundState",
    "Schedule",
    "SessionError",
    "SessionPlan",
    "SessionResult",
    "SessionRunner",
    "SimulatedClock",
    "SourceError",
    "SyntheticTeamSimulator",
    "SystemClock",
    "TeamBehaviour",
    "WorkspaceTeamBehaviour",
    "Team",
    "TeamAssignment",
    "WatermarkStore",
    "WorkspaceApiSource",
    "assemble_teams",
    "condition_violations",
    "read_events",
    "run_scheduled",
]
