"""LLM-driven refinement of news into key-driver and outlook texts and their embeddings."""

from .backends import (
    BackendConfig,
    BackendError,
    HashEmbeddingBackend,
    HttpChatBackend,
    HttpEmbeddingBackend,
    MockChatBackend,
    RetryExhausted,
    ScriptedChatBackend,
    bounded_map,
    call_with_retries,
    tokenize,
)
from .pipeline import (
    OUTPUT_FILES,
    DomainConfig,
    ParseError,
    PipelineFailure,
    PipelineResult,
    Retry,
    ask,
    embed_insights,
    embed_text,
    events_in_window,
    parse_events,
    parse_insight,
    run_pipeline,
    stage1_summarize_filter,
    stage2_extract_events,
    stage3_generate_insights,
)
from .records import (
    ArticleSummary,
    DailyEvent,
    ErrorRecord,
    InsightDoc,
    NewsArticle,
    StageOutcome,
    read_corpus,
    read_jsonl,
    write_corpus,
    write_jsonl,
)

__all__ = [
    "ArticleSummary", "BackendConfig", "BackendError", "DailyEvent", "DomainConfig", "ErrorRecord",
    "HashEmbeddingBackend", "HttpChatBackend", "HttpEmbeddingBackend", "InsightDoc", "MockChatBackend",
    "NewsArticle", "OUTPUT_FILES", "ParseError", "PipelineFailure", "PipelineResult", "Retry",
    "RetryExhausted", "ScriptedChatBackend", "StageOutcome", "ask", "bounded_map", "call_with_retries",
    "embed_insights", "embed_text", "events_in_window", "parse_events", "parse_insight", "read_corpus",
    "read_jsonl", "run_pipeline", "stage1_summarize_filter", "stage2_extract_events",
    "stage3_generate_insights", "tokenize", "write_corpus", "write_jsonl",
]
