"""Rule-based communication metrics over transcripts."""

from teamcoach.textmetrics.conversation import (
    DegenerateTranscriptError,
    EngagementReport,
    FlowStats,
    engagement,
    flow_stats,
)
from teamcoach.textmetrics.lexicons import (
    FUNCTION_WORD_CATEGORIES,
    FunctionWordLexicon,
    ValenceLexicon,
    load_function_words,
    load_valence_lexicon,
)
from teamcoach.textmetrics.lsm import (
    FunctionWordProfile,
    LsmResult,
    function_word_profile,
    lsm,
    pairwise_lsm,
    text_profile,
)
from teamcoach.textmetrics.sentiment import SentimentAnalyzer, SentimentScore, sentiment
from teamcoach.textmetrics.tokenize import tokenize, word_count

__all__ = [
    "FUNCTION_WORD_CATEGORIES",
    "DegenerateTranscriptError",
    "EngagementReport",
    "FlowStats",
    "FunctionWordLexicon",
    "FunctionWordProfile",
    "LsmResult",
    "SentimentAnalyzer",
    "SentimentScore",
    "ValenceLexicon",
    "engagement",
    "flow_stats",
    "function_word_profile",
    "load_function_words",
    "load_valence_lexicon",
    "lsm",
    "pairwise_lsm",
    "sentiment",
    "text_profile",
    "tokenize",
    "word_count",
]
