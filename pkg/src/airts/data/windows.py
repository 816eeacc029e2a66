"""Lookback/horizon windows aligned with same-day text embeddings.

The forecast origin is the first predicted day: ``x`` holds the ``T`` rows
strictly before it and ``y`` the ``H`` rows starting at it.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date
from typing import Sequence

import numpy as np

from ..errors import ConfigurationError
from .embeddings import EmbeddingSeries
from .frame import TimeSeriesFrame


@dataclass
class WindowSample:
    x: np.ndarray                      # (C, T)
    y: np.ndarray                      # (targets, H)
    key_driver: np.ndarray | None      # (D,)
    outlook: np.ndarray | None         # (D,)
    descriptions: np.ndarray | None    # (C, D_desc)
    origin: date


@dataclass
class Batch:
    x: np.ndarray
    y: np.ndarray
    key_driver: np.ndarray | None
    outlook: np.ndarray | None
    descriptions: np.ndarray | None
    origins: list[date]

    def __len__(self) -> int:
        return self.x.shape[0]


def description_matrix(channels: Sequence[str], descriptions: dict[str, np.ndarray] | None):
    if descriptions is None:
        return None
    missing = [c for c in channels if c not in descriptions]
    if missing:
        raise ConfigurationError(f"no description embedding for channels: {', '.join(missing)}")
    return np.stack([np.asarray(descriptions[c], dtype=np.float64) for c in channels])


def build_windows(
    frame: TimeSeriesFrame,
    key_driver: EmbeddingSeries | None,
    outlook: EmbeddingSeries | None,
    descriptions: dict[str, np.ndarray] | None,
    origin_dates: Sequence[date],
    target_indices: Sequence[int],
    T: int = 20,
    H: int = 20,
) -> tuple[list[WindowSample], list[tuple[date, str]]]:
    """Assemble samples at each origin; origins that cannot be served are
    returned as ``(date, reason)`` instead of failing the whole call."""
    desc = description_matrix(frame.channels, descriptions)
    targets = list(target_indices)
    samples: list[WindowSample] = []
    rejected: list[tuple[date, str]] = []
    n = len(frame.dates)
    for d in origin_dates:
        try:
            i = frame.index_of(d)
        except KeyError:
            rejected.append((d, "origin not in calendar"))
            continue
        if i < T:
            rejected.append((d, f"only {i} history rows, need {T}"))
            continue
        if i + H > n:
            rejected.append((d, f"only {n - i} future rows, need {H}"))
            continue
        if key_driver is not None and d not in key_driver:
            rejected.append((d, "missing key_driver embedding"))
            continue
        if outlook is not None and d not in outlook:
            rejected.append((d, "missing outlook embedding"))
            continue
        samples.append(WindowSample(
            x=frame.values[:, i - T:i].copy(),
            y=frame.values[targets, i:i + H].copy(),
            key_driver=None if key_driver is None else key_driver[d],
            outlook=None if outlook is None else outlook[d],
            descriptions=desc,
            origin=d,
        ))
    return samples, rejected


def collate(samples: Sequence[WindowSample]) -> Batch:
    def stack(attr):
        vals = [getattr(s, attr) for s in samples]
        return None if vals[0] is None else np.stack(vals)

    return Batch(
        x=np.stack([s.x for s in samples]),
        y=np.stack([s.y for s in samples]),
        key_driver=stack("key_driver"),
        outlook=stack("outlook"),
        descriptions=stack("descriptions"),
        origins=[s.origin for s in samples],
    )
