"""Biweekly retrain schedule over ISO weeks."""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, field
from datetime import date, timedelta
from typing import Sequence

from ..data.calendar import iso_monday, iso_week, parse_iso_week, weeks_in_iso_year
from ..errors import ConfigurationError

STEP_DAYS = 14
SPAN_DAYS = 29
MAX_ORIGINS = 10


@dataclass(frozen=True)
class RetrainPoint:
    index: int
    iso_year: int
    iso_week: int
    cutoff: date                 # Monday of week w; training uses rows strictly before it
    span_end: date               # last calendar day of the evaluation span
    origins: tuple[date, ...]

    @property
    def label(self) -> str:
        return f"{self.iso_year}-W{self.iso_week:02d}"


@dataclass
class BacktestSchedule:
    points: list[RetrainPoint]
    warnings: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.points)


def build_biweekly_schedule(start, years: int, trading_dates: Sequence[date],
                            horizon: int = 20) -> BacktestSchedule:
    """Retrain every two ISO weeks from ``start`` for ``years`` ISO years.

    Origins are the trading days among Monday..Friday of weeks ``w`` and
    ``w + 1``. Origins without ``horizon`` trading days from themselves to the
    end of the calendar are dropped with a warning; a point left with no
    origins is dropped too.
    """
    if years < 1:
        raise ConfigurationError(f"years must be >= 1, got {years}")
    if isinstance(start, str):
        try:
            start = parse_iso_week(start)
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from None
    y0, w0 = start
    first = iso_monday(y0, w0)
    end = iso_monday(y0 + years, min(w0, weeks_in_iso_year(y0 + years)))
    days = sorted(trading_dates)
    n = len(days)

    points, warnings = [], []
    cutoff = first
    while cutoff < end:
        y, w = iso_week(cutoff)
        window = [cutoff + timedelta(days=k) for k in range(12) if (cutoff + timedelta(days=k)).weekday() < 5]
        origins = []
        for d in window:
            i = bisect_left(days, d)
            if i == n or days[i] != d:
                continue
            if i + horizon > n:
                warnings.append(f"{y}-W{w:02d}: origin {d} dropped, only {n - i} trading days of horizon")
                continue
            origins.append(d)
        if origins:
            points.append(RetrainPoint(len(points), y, w, cutoff, cutoff + timedelta(days=SPAN_DAYS - 1),
                                       tuple(origins)))
        else:
            warnings.append(f"{y}-W{w:02d}: no usable forecast origins, point dropped")
        cutoff += timedelta(days=STEP_DAYS)
    return BacktestSchedule(points, warnings)
