"""From transcript to parsed feedback messages."""

from teamcoach.feedback.bundle import MetricBundle, analyze
from teamcoach.feedback.pipeline import (
    FeedbackConfig,
    FeedbackCycle,
    FeedbackMessage,
    build_requests,
    generate_feedback,
)
from teamcoach.feedback.sections import (
    SECTION_KEYS,
    Section,
    SectionParse,
    classify_heading,
    validate_sections,
)

__all__ = [
    "SECTION_KEYS",
    "FeedbackConfig",
    "FeedbackCycle",
    "FeedbackMessage",
    "MetricBundle",
    "Section",
    "SectionParse",
    "analyze",
    "build_requests",
    "classify_heading",
    "generate_feedback",
    "validate_sections",
]
