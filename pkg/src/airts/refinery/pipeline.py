"""Three-stage news refinement: article summaries, daily events, windowed insights, embeddings."""

from __future__ import annotations

import json
import logging
import time
from collections import defaultdict
from dataclasses import asdict, dataclass, field, fields
from datetime import date, timedelta
from pathlib import Path
from typing import Callable, Sequence

import httpx

from ..data.calendar import weekdays_between
from ..errors import ConfigurationError, DataError
from . import prompts
from .backends import MAX_RETRIES, BackendError, ChatBackend, EmbeddingBackend, bounded_map
from .records import (
    ArticleSummary,
    DailyEvent,
    ErrorRecord,
    InsightDoc,
    NewsArticle,
    StageOutcome,
    read_corpus,
    write_jsonl,
)

log = logging.getLogger(__name__)

OUTPUT_FILES = ("summaries.jsonl", "events.jsonl", "insights.jsonl", "keydriver_emb.jsonl",
                "outlook_emb.jsonl")
ERRORS_FILE = "errors.jsonl"
FAILURE_THRESHOLD = 0.5


class ParseError(ValueError):
    """A backend reply did not follow the requested format."""


class PipelineFailure(RuntimeError):
    def __init__(self, stage: str, rate: float):
        super().__init__(f"stage {stage!r}: {rate:.0%} of items failed")
        self.stage = stage
        self.rate = rate


@dataclass(frozen=True)
class DomainConfig:
    subject: str = "crude oil"
    description: str = "crude oil market"
    targets: dict = field(default_factory=lambda: {"WTI": "West Texas Intermediate Crude Oil Price"})
    window_days: int = 20
    max_events: int = 5

    def __post_init__(self):
        if not self.targets:
            raise ConfigurationError("domain needs at least one target")
        if self.window_days < 1 or self.max_events < 1:
            raise ConfigurationError("window_days and max_events must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "DomainConfig":
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigurationError(f"unknown domain config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class Retry:
    """Attempt budget shared by transport failures and format re-asks."""

    retries: int = MAX_RETRIES
    base_delay: float = 0.5
    sleep: Callable[[float], None] = time.sleep


def ask(backend: ChatBackend, prompt: str, parse: Callable[[str], object], retry: Retry):
    """Call the backend until ``parse`` accepts a reply; at most ``retries + 1`` attempts.

    A transport failure backs off exponentially; a format failure re-asks at
    once with a reminder appended. Returns ``(value, attempts)`` or raises
    ``ParseError`` / ``BackendError`` carrying the attempt count.
    """
    reminded = False
    last: Exception | None = None
    for attempt in range(retry.retries + 1):
        try:
            text = backend.complete(prompts.SYSTEM, prompts.with_reminder(prompt, int(reminded)))
        except (BackendError, httpx.HTTPError) as exc:
            last = exc
            if attempt < retry.retries:
                retry.sleep(retry.base_delay * 2 ** attempt)
            continue
        try:
            return parse(text), attempt + 1
        except ParseError as exc:
            last, reminded = exc, True
    err = last if isinstance(last, (ParseError, BackendError)) else BackendError(str(last))
    err.attempts = retry.retries + 1
    raise err


def _fail(stage: str, item: str, exc: Exception) -> ErrorRecord:
    return ErrorRecord(stage, item, str(exc), getattr(exc, "attempts", 1))


# -------------------------------------------------------------------- stage 1

def check_unique_ids(articles: Sequence[NewsArticle]) -> None:
    seen = set()
    for a in articles:
        if a.id in seen:
            raise DataError(f"duplicate article id {a.id!r}")
        seen.add(a.id)


def _parse_summary(text: str) -> str:
    return text.strip()


def stage1_summarize_filter(articles: Sequence[NewsArticle], subject: str, description: str,
                            backend: ChatBackend, retry: Retry | None = None,
                            max_in_flight: int = 4) -> tuple[list[ArticleSummary], StageOutcome]:
    check_unique_ids(articles)
    retry = retry or Retry()
    outcome = StageOutcome("summarize", len(articles))

    def one(a: NewsArticle):
        prompt = prompts.summary_prompt(subject, description, a.datetime.isoformat(sep=" "), a.headline, a.body)
        try:
            text, _ = ask(backend, prompt, _parse_summary, retry)
        except (ParseError, BackendError) as exc:
            return _fail("summarize", a.id, exc)
        if text == prompts.NA_SENTINEL:
            return ArticleSummary(a.id, a.date, "", False)
        return ArticleSummary(a.id, a.date, text, True)

    results = bounded_map(one, list(articles), max_in_flight)
    out = [r for r in results if isinstance(r, ArticleSummary)]
    outcome.errors = [r for r in results if isinstance(r, ErrorRecord)]
    out.sort(key=lambda s: (s.date, s.article_id))
    return out, outcome


# -------------------------------------------------------------------- stage 2

def _text_field(obj: dict, key: str) -> str:
    v = obj.get(key)
    if not isinstance(v, str) or not v.strip():
        raise ParseError(f"event field {key!r} missing or empty")
    return v.strip()


def parse_events(text: str, day: date, cap: int) -> list[DailyEvent]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"not JSON: {exc.msg}") from None
    if not isinstance(data, list):
        raise ParseError("expected a JSON list of events")
    events = []
    for obj in data:
        if not isinstance(obj, dict):
            raise ParseError("event entries must be JSON objects")
        events.append(DailyEvent(day, _text_field(obj, "name"), _text_field(obj, "summary"),
                                 _text_field(obj, "rationale")))
    return events[:cap]


def stage2_extract_events(summaries: Sequence[ArticleSummary], subject: str, backend: ChatBackend,
                          n: int = 5, retry: Retry | None = None,
                          max_in_flight: int = 4) -> tuple[list[DailyEvent], StageOutcome]:
    retry = retry or Retry()
    by_date: dict[date, list[ArticleSummary]] = defaultdict(list)
    for s in summaries:
        if s.relevant:
            by_date[s.date].append(s)
    days = sorted(by_date)
    outcome = StageOutcome("events", len(days))

    def one(day: date):
        group = sorted(by_date[day], key=lambda s: s.article_id)
        prompt = prompts.events_prompt(subject, day.isoformat(), group, n)
        try:
            events, _ = ask(backend, prompt, lambda t: parse_events(t, day, n), retry)
        except (ParseError, BackendError) as exc:
            return _fail("events", day.isoformat(), exc)
        return events

    out: list[DailyEvent] = []
    for r in bounded_map(one, days, max_in_flight):
        if isinstance(r, ErrorRecord):
            outcome.errors.append(r)
        else:
            out.extend(r)
    return out, outcome


# -------------------------------------------------------------------- stage 3

def events_in_window(events: Sequence[DailyEvent], day: date, window_days: int = 20) -> list[DailyEvent]:
    """Events dated in ``[day - (window_days - 1), day]``, oldest first, original order within a date."""
    start = day - timedelta(days=window_days - 1)
    return [e for e in events if start <= e.date <= day]


def parse_insight(text: str) -> tuple[str, str]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"not JSON: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ParseError("expected a JSON object")
    kd, ol = data.get("key_driver"), data.get("outlook")
    if not isinstance(kd, str) or not isinstance(ol, str) or not kd.strip() or not ol.strip():
        raise ParseError("reply needs non-empty string keys key_driver and outlook")
    return kd.strip(), ol.strip()


def stage3_generate_insights(events: Sequence[DailyEvent], targets: dict[str, str], dates: Sequence[date],
                             backend: ChatBackend, window_days: int = 20, retry: Retry | None = None,
                             max_in_flight: int = 4) -> tuple[list[InsightDoc], StageOutcome]:
    """One insight per (date, target). ``targets`` maps a target name to its description."""
    retry = retry or Retry()
    ordered = sorted(events, key=lambda e: e.date)       # stable: keeps per-date response order
    jobs, empty = [], []
    for day in sorted(set(dates)):
        window = events_in_window(ordered, day, window_days)
        for name in sorted(targets):
            if window:
                jobs.append((day, name, window))
            else:
                empty.append(InsightDoc(day, name, "", "", empty_window=True))
    outcome = StageOutcome("insights", len(jobs))

    def one(job):
        day, name, window = job
        start = day - timedelta(days=window_days - 1)
        prompt = prompts.insight_prompt(targets[name], start.isoformat(), day.isoformat(), window_days, window)
        try:
            (kd, ol), _ = ask(backend, prompt, parse_insight, retry)
        except (ParseError, BackendError) as exc:
            return _fail("insights", f"{day.isoformat()}/{name}", exc)
        return InsightDoc(day, name, kd, ol)

    out = list(empty)
    for r in bounded_map(one, jobs, max_in_flight):
        if isinstance(r, ErrorRecord):
            outcome.errors.append(r)
        else:
            out.append(r)
    out.sort(key=lambda d: (d.date, d.target))
    return out, outcome


# ------------------------------------------------------------------ embedding

def embed_text(text: str, backend: EmbeddingBackend, retry: Retry | None = None):
    if not text.strip():
        raise DataError("cannot embed empty text")
    retry = retry or Retry()
    last: Exception | None = None
    for attempt in range(retry.retries + 1):
        try:
            return backend.embed(text)
        except (BackendError, httpx.HTTPError) as exc:
            last = exc
            if attempt < retry.retries:
                retry.sleep(retry.base_delay * 2 ** attempt)
    err = BackendError(f"embedding failed after {retry.retries + 1} attempts: {last}")
    err.attempts = retry.retries + 1
    raise err


def embed_insights(insights: Sequence[InsightDoc], backend: EmbeddingBackend, retry: Retry | None = None,
                   max_in_flight: int = 1) -> tuple[list[dict], list[dict], StageOutcome]:
    todo = [(doc, stream) for doc in insights if not doc.empty_window for stream in ("key_driver", "outlook")]
    outcome = StageOutcome("embed", len(todo))

    def one(job):
        doc, stream = job
        try:
            v = embed_text(getattr(doc, stream), backend, retry)
        except (BackendError, DataError) as exc:
            return _fail("embed", f"{doc.date.isoformat()}/{doc.target}/{stream}", exc)
        return {"date": doc.date.isoformat(), "target": doc.target, "vector": [float(x) for x in v]}

    kd, ol = [], []
    for (doc, stream), r in zip(todo, bounded_map(one, todo, max_in_flight)):
        if isinstance(r, ErrorRecord):
            outcome.errors.append(r)
        else:
            (kd if stream == "key_driver" else ol).append(r)
    return kd, ol, outcome


# ------------------------------------------------------------------- pipeline

@dataclass
class PipelineResult:
    files: list[Path]
    stages: list[StageOutcome]

    @property
    def errors(self) -> list[ErrorRecord]:
        return [e for s in self.stages for e in s.errors]

    @property
    def failed_stage(self) -> StageOutcome | None:
        for s in self.stages:
            if s.failure_rate > FAILURE_THRESHOLD:
                return s
        return None


def default_insight_dates(articles: Sequence[NewsArticle]) -> list[date]:
    """Weekdays from the first to the last article date."""
    if not articles:
        return []
    days = sorted(a.date for a in articles)
    return weekdays_between(days[0], days[-1])


def run_pipeline(corpus, out_dir, domain: DomainConfig, chat: ChatBackend, embedder: EmbeddingBackend,
                 dates: Sequence[date] | None = None, retry: Retry | None = None,
                 max_in_flight: int | None = None) -> PipelineResult:
    """Run all stages and write the five artifacts plus ``errors.jsonl`` under ``out_dir``.

    ``corpus`` is a path (JSONL file or directory) or a list of articles.
    Stages run one after another; within a stage calls may overlap up to the
    backend's in-flight bound.
    """
    articles = read_corpus(corpus) if isinstance(corpus, (str, Path)) else list(corpus)
    check_unique_ids(articles)
    bound = max_in_flight or getattr(chat, "max_in_flight", 4)
    ebound = max_in_flight or getattr(embedder, "max_in_flight", 1)
    retry = retry or Retry()
    if dates is None:
        dates = default_insight_dates(articles)

    summaries, s1 = stage1_summarize_filter(articles, domain.subject, domain.description, chat, retry, bound)
    events, s2 = stage2_extract_events(summaries, domain.subject, chat, domain.max_events, retry, bound)
    insights, s3 = stage3_generate_insights(events, domain.targets, dates, chat, domain.window_days, retry, bound)
    kd, ol, s4 = embed_insights(insights, embedder, retry, ebound)
    stages = [s1, s2, s3, s4]
    for s in stages:
        log.info("stage %s: %d items, %d failed", s.name, s.items, len(s.errors))

    out = Path(out_dir)
    files = [
        write_jsonl([s.to_dict() for s in summaries], out / "summaries.jsonl"),
        write_jsonl([e.to_dict() for e in events], out / "events.jsonl"),
        write_jsonl([d.to_dict() for d in insights], out / "insights.jsonl"),
        write_jsonl(kd, out / "keydriver_emb.jsonl"),
        write_jsonl(ol, out / "outlook_emb.jsonl"),
        write_jsonl([e.to_dict() for s in stages for e in sorted(s.errors, key=lambda e: e.item)],
                    out / ERRORS_FILE),
    ]
    return PipelineResult(files, stages)
