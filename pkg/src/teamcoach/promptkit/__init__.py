"""Prompt templates and their rendering."""

from teamcoach.promptkit.blocks import ContextBlock
from teamcoach.promptkit.judgments import (
    DEFAULT_RULES,
    JudgmentRule,
    judgment_synthesizer,
    rules_with_thresholds,
)
from teamcoach.promptkit.render import (
    RenderedPrompt,
    RenderError,
    render_individual_prompt,
    render_ranking_eval_prompt,
    render_team_prompt,
)
from teamcoach.promptkit.specs import Audience, ContextLevel, Length, PromptSpec, grid
from teamcoach.promptkit.templates import (
    BLOCK_KINDS,
    TemplateRegistry,
    default_registry,
)

__all__ = [
    "BLOCK_KINDS",
    "DEFAULT_RULES",
    "Audience",
    "ContextBlock",
    "ContextLevel",
    "JudgmentRule",
    "Length",
    "PromptSpec",
    "RenderError",
    "RenderedPrompt",
    "TemplateRegistry",
    "default_registry",
    "grid",
    "judgment_synthesizer",
    "render_individual_prompt",
    "render_ranking_eval_prompt",
    "render_team_prompt",
    "rules_with_thresholds",
]
