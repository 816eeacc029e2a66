from __future__ import annotations

from dataclasses import dataclass
from datetime import date

import numpy as np

from .frame import DataError, TimeSeriesFrame

STD_FLOOR = 1e-8


@dataclass(frozen=True)
class ZScore:
    """Per-channel population mean/std, fit on rows strictly before a cutoff."""

    mean: np.ndarray
    std: np.ndarray

    def apply(self, values: np.ndarray) -> np.ndarray:
        return (values - self.mean[:, None]) / self.std[:, None]

    def invert(self, values: np.ndarray) -> np.ndarray:
        return values * self.std[:, None] + self.mean[:, None]


def zscore_fit(frame: TimeSeriesFrame, train_cutoff_date: date) -> ZScore:
    n = sum(1 for d in frame.dates if d < train_cutoff_date)
    if n == 0:
        raise DataError(f"no rows before cutoff {train_cutoff_date}")
    train = frame.values[:, :n]
    return ZScore(train.mean(axis=1), np.maximum(train.std(axis=1), STD_FLOOR))


def zscore_apply(frame: TimeSeriesFrame, z: ZScore) -> TimeSeriesFrame:
    return TimeSeriesFrame(list(frame.dates), list(frame.channels), z.apply(frame.values))


def zscore_invert(frame: TimeSeriesFrame, z: ZScore) -> TimeSeriesFrame:
    return TimeSeriesFrame(list(frame.dates), list(frame.channels), z.invert(frame.values))
