from __future__ import annotations

from datetime import date, timedelta


def iso_week(d: date) -> tuple[int, int]:
    """ISO-8601 week-numbering ``(year, week)``."""
    year, week, _ = d.isocalendar()
    return year, week


def iso_monday(year: int, week: int) -> date:
    return date.fromisocalendar(year, week, 1)


def weeks_in_iso_year(year: int) -> int:
    # Dec 28 always falls in the last ISO week of its year
    return date(year, 12, 28).isocalendar()[1]


def parse_iso_week(text: str) -> tuple[int, int]:
    """Parse ``'2022-W01'`` or ``'2022-01'``."""
    year, _, week = text.strip().upper().partition("-")
    week = week.lstrip("W")
    y, w = int(year), int(week)
    if not 1 <= w <= weeks_in_iso_year(y):
        raise ValueError(f"{text!r}: ISO year {y} has no week {w}")
    return y, w


def weekdays(start: date, n: int) -> list[date]:
    """The first ``n`` Monday-to-Friday dates on or after ``start``."""
    out, d = [], start
    while len(out) < n:
        if d.weekday() < 5:
            out.append(d)
        d += timedelta(days=1)
    return out


def weekdays_between(start: date, end: date) -> list[date]:
    out, d = [], start
    while d <= end:
        if d.weekday() < 5:
            out.append(d)
        d += timedelta(days=1)
    return out
