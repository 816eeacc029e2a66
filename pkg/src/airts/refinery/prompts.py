"""Prompt templates for the three refinement stages.

Placeholders use ``string.Template`` syntax (``$SUBJECT`` and friends) so a
literal brace in article text can never break formatting.
"""

from __future__ import annotations

import json
from string import Template
from typing import Sequence

from .records import ArticleSummary, DailyEvent

NA_SENTINEL = "N/A"

SYSTEM = "You are a careful financial news analyst. Answer only in the format requested."

SUMMARY_TEMPLATE = Template("""\
You will read one news article published at $DATETIME.
Decide whether it carries information relevant to the $SUBJECT, where the wider context is the $DESCRIPTION.
If it is relevant, reply with a single paragraph summarising the facts that matter for the $SUBJECT.
If it is not relevant, reply with exactly N/A and nothing else.

Headline: $HEADLINE

Article:
$BODY
""")

EVENTS_TEMPLATE = Template("""\
Below are summaries of news published on $DATE about the $SUBJECT.
Pick at most $N events with the largest likely effect on the $SUBJECT, most important first.
Reply with a JSON list. Each element must be an object with the string keys
"name", "summary" and "rationale" (why the event moves the $SUBJECT).

Summaries:
$SUMMARIES
""")

INSIGHT_TEMPLATE = Template("""\
Target: $TARGET
Window: $START to $DATE ($DAYS calendar days)

Events in the window, oldest first:
$EVENTS

Using only these events, write two short analyses for the target.
key_driver: what moved the target during the window and why.
outlook: how the target is likely to move over the next few weeks.
Reply with a JSON object with exactly the string keys "key_driver" and "outlook".
""")

FORMAT_REMINDER = ("Your previous reply could not be parsed. Reply again with valid JSON only, "
                   "following the requested keys exactly.")


def summary_prompt(subject: str, description: str, when: str, headline: str, body: str) -> str:
    return SUMMARY_TEMPLATE.substitute(SUBJECT=subject, DESCRIPTION=description, DATETIME=when,
                                       HEADLINE=headline, BODY=body)


def events_prompt(subject: str, day: str, summaries: Sequence[ArticleSummary], n: int) -> str:
    body = "\n".join(f"- [{s.article_id}] {s.summary}" for s in summaries)
    return EVENTS_TEMPLATE.substitute(SUBJECT=subject, DATE=day, N=n, SUMMARIES=body)


def insight_prompt(target: str, start: str, day: str, days: int, events: Sequence[DailyEvent]) -> str:
    lines = [json.dumps({"date": e.date.isoformat(), "name": e.name, "summary": e.summary,
                         "rationale": e.rationale}, sort_keys=True) for e in events]
    return INSIGHT_TEMPLATE.substitute(TARGET=target, START=start, DATE=day, DAYS=days,
                                       EVENTS="\n".join(lines))


def with_reminder(prompt: str, attempt: int) -> str:
    """The prompt for re-ask number ``attempt`` (0 is the original)."""
    return prompt if attempt == 0 else f"{prompt}\n{FORMAT_REMINDER}"
