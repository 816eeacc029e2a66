"""Series/embedding ingestion, normalisation, windowing and the synthetic benchmark."""

from .calendar import iso_monday, iso_week, parse_iso_week, weekdays, weeks_in_iso_year
from .embeddings import (
    CHANNEL_DESCRIPTION,
    KEY_DRIVER,
    OUTLOOK,
    EmbeddingSeries,
    read_descriptions_jsonl,
    read_embeddings_jsonl,
    write_descriptions_jsonl,
    write_embeddings_jsonl,
)
from .frame import (
    TimeSeriesFrame,
    linear_interpolate_missing,
    load_series_csv,
    weekly_to_daily,
    write_series_csv,
)
from .normalize import ZScore, zscore_apply, zscore_fit, zscore_invert
from .synthetic import SyntheticData, SyntheticSpec, synth_generate
from .windows import Batch, WindowSample, build_windows, collate

__all__ = [
    "Batch", "CHANNEL_DESCRIPTION", "EmbeddingSeries", "KEY_DRIVER", "OUTLOOK", "SyntheticData",
    "SyntheticSpec", "TimeSeriesFrame", "WindowSample", "ZScore", "build_windows", "collate",
    "iso_monday", "iso_week", "linear_interpolate_missing", "load_series_csv", "parse_iso_week",
    "read_descriptions_jsonl", "read_embeddings_jsonl", "synth_generate", "weekdays",
    "weekly_to_daily", "weeks_in_iso_year", "write_descriptions_jsonl", "write_embeddings_jsonl",
    "write_series_csv", "zscore_apply", "zscore_fit", "zscore_invert",
]
