"""Pipeline record types and their JSONL form."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from datetime import date, datetime
from pathlib import Path
from typing import Iterable

from ..errors import FormatError


@dataclass(frozen=True)
class NewsArticle:
    id: str
    datetime: datetime
    headline: str
    body: str

    @property
    def date(self) -> date:
        return self.datetime.date()

    def to_dict(self) -> dict:
        return {"id": self.id, "datetime": self.datetime.isoformat(), "headline": self.headline,
                "body": self.body}


@dataclass(frozen=True)
class ArticleSummary:
    article_id: str
    date: date
    summary: str
    relevant: bool

    def to_dict(self) -> dict:
        return {"article_id": self.article_id, "date": self.date.isoformat(), "summary": self.summary,
                "relevant": self.relevant}


@dataclass(frozen=True)
class DailyEvent:
    date: date
    name: str
    summary: str
    rationale: str

    def to_dict(self) -> dict:
        return {"date": self.date.isoformat(), "name": self.name, "summary": self.summary,
                "rationale": self.rationale}


@dataclass(frozen=True)
class InsightDoc:
    date: date
    target: str
    key_driver: str
    outlook: str
    empty_window: bool = False

    def to_dict(self) -> dict:
        return {"date": self.date.isoformat(), "target": self.target, "key_driver": self.key_driver,
                "outlook": self.outlook, "empty_window": self.empty_window}


@dataclass(frozen=True)
class ErrorRecord:
    stage: str
    item: str          # article id, date, "date/target" ...
    message: str
    attempts: int = 1

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class StageOutcome:
    """Results of one stage plus the per-item failures it absorbed."""

    name: str
    items: int = 0
    errors: list[ErrorRecord] = field(default_factory=list)

    @property
    def failure_rate(self) -> float:
        return len(self.errors) / self.items if self.items else 0.0


def parse_article(rec: dict, where: str = "") -> NewsArticle:
    try:
        dt = datetime.fromisoformat(str(rec["datetime"]))
        return NewsArticle(str(rec["id"]), dt, str(rec.get("headline", "")), str(rec["body"]))
    except (KeyError, ValueError, TypeError) as exc:
        raise FormatError(f"{where}bad article record ({exc})") from None


def read_corpus(path) -> list[NewsArticle]:
    """Articles from a JSONL file, or from every ``*.jsonl`` file in a directory (name order)."""
    p = Path(path)
    files = sorted(p.glob("*.jsonl")) if p.is_dir() else [p]
    out = []
    for f in files:
        with open(f, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise FormatError(f"{f}:{line_no}: {exc.msg}") from None
                out.append(parse_article(rec, f"{f}:{line_no}: "))
    return out


def write_corpus(articles: Iterable[NewsArticle], path) -> None:
    write_jsonl([a.to_dict() for a in articles], path)


def write_jsonl(records: Iterable[dict], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True, ensure_ascii=False) + "\n")
    return path


def read_jsonl(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
