"""Calendar-indexed multichannel series: CSV I/O and gap filling."""

from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass
from datetime import date
from pathlib import Path

import numpy as np

from ..errors import DataError, FormatError


@dataclass
class TimeSeriesFrame:
    """``values`` is ``(C, N)``; NaN marks a missing cell."""

    dates: list[date]
    channels: list[str]
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (len(self.channels), len(self.dates)):
            raise DataError(
                f"values shape {self.values.shape} != ({len(self.channels)}, {len(self.dates)})"
            )
        for a, b in zip(self.dates, self.dates[1:]):
            if b <= a:
                raise FormatError(f"dates must be strictly increasing: {a} then {b}")

    @property
    def n_missing(self) -> int:
        return int(np.isnan(self.values).sum())

    def index_of(self, d: date) -> int:
        i = bisect.bisect_left(self.dates, d)
        if i == len(self.dates) or self.dates[i] != d:
            raise KeyError(d)
        return i

    def channel_index(self, name: str) -> int:
        return self.channels.index(name)


def _parse_date(text: str, row: int) -> date:
    try:
        return date.fromisoformat(text.strip())
    except ValueError:
        raise FormatError(f"row {row}: unparseable date {text!r}") from None


def load_series_csv(path) -> TimeSeriesFrame:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        if not header or header[0].strip() != "date":
            raise FormatError(f"{path}: header must start with 'date'")
        channels = [h.strip() for h in header[1:]]
        dates, rows = [], []
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise FormatError(f"row {row_no}: expected {len(header)} fields, got {len(row)}")
            d = _parse_date(row[0], row_no)
            if dates and d <= dates[-1]:
                raise FormatError(f"row {row_no}: date {d} not after {dates[-1]}")
            vals = []
            for col, field in enumerate(row[1:], start=2):
                field = field.strip()
                if field == "":
                    vals.append(math.nan)
                    continue
                try:
                    vals.append(float(field))
                except ValueError:
                    raise FormatError(f"row {row_no}, column {col}: unparseable number {field!r}") from None
            dates.append(d)
            rows.append(vals)
    values = np.array(rows, dtype=np.float64).T if rows else np.zeros((len(channels), 0))
    return TimeSeriesFrame(dates, channels, values)


def write_series_csv(frame: TimeSeriesFrame, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["date", *frame.channels])
        for j, d in enumerate(frame.dates):
            col = frame.values[:, j]
            writer.writerow([d.isoformat(), *("" if np.isnan(v) else format(v, ".17g") for v in col)])


def _fill_row(row: np.ndarray, name: str) -> np.ndarray:
    observed = np.flatnonzero(~np.isnan(row))
    if observed.size == 0:
        raise DataError(f"channel {name!r} has no observed values")
    # np.interp holds the end values constant outside the observed range
    return np.interp(np.arange(row.size), observed, row[observed])


def linear_interpolate_missing(frame: TimeSeriesFrame) -> TimeSeriesFrame:
    """Interior gaps linear in index; leading/trailing gaps take the nearest observation."""
    filled = np.array([_fill_row(row, name) for row, name in zip(frame.values, frame.channels)])
    filled = filled.reshape(frame.values.shape)
    return TimeSeriesFrame(list(frame.dates), list(frame.channels), filled)


def weekly_to_daily(frame_weekly: TimeSeriesFrame, daily_dates: list[date]) -> TimeSeriesFrame:
    """Resample weekly anchors onto ``daily_dates``, linear in daily index between anchors."""
    if not frame_weekly.dates:
        raise DataError("weekly frame is empty")
    daily_dates = list(daily_dates)
    if not daily_dates:
        raise DataError("daily calendar is empty")
    lo, hi = daily_dates[0], daily_dates[-1]
    outside = [d for d in frame_weekly.dates if d < lo or d > hi]
    if outside:
        raise DataError(f"weekly anchors outside the daily span {lo}..{hi}: {outside[:3]}")
    # anchors that are not themselves daily dates get a fractional daily index
    ordinals = np.array([d.toordinal() for d in daily_dates], dtype=float)
    anchors = np.interp([d.toordinal() for d in frame_weekly.dates], ordinals,
                        np.arange(len(daily_dates), dtype=float))
    grid = np.arange(len(daily_dates), dtype=float)
    out = np.empty((len(frame_weekly.channels), len(daily_dates)))
    for c, row in enumerate(frame_weekly.values):
        ok = ~np.isnan(row)
        if not ok.any():
            raise DataError(f"channel {frame_weekly.channels[c]!r} has no observed values")
        out[c] = np.interp(grid, anchors[ok], row[ok])
    return TimeSeriesFrame(daily_dates, list(frame_weekly.channels), out)
