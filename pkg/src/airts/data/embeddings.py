"""Date-keyed embedding streams and their JSONL files.

One record per line, ``{"date": "YYYY-MM-DD", "vector": [...]}``. Channel
descriptions use the same layout with ``"channel"`` in place of ``"date"``.
Extra keys are allowed; ``target`` selects one target's records from a file
that carries several.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

import numpy as np

from .frame import FormatError

KEY_DRIVER = "key_driver"
OUTLOOK = "outlook"
CHANNEL_DESCRIPTION = "channel_description"


@dataclass
class EmbeddingSeries:
    stream: str
    dim: int
    vectors: dict[date, np.ndarray] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.vectors)

    def __contains__(self, d: date) -> bool:
        return d in self.vectors

    def __getitem__(self, d: date) -> np.ndarray:
        return self.vectors[d]


def _dump_vector(v) -> list[float]:
    # repr() is the shortest string that round-trips a float64
    return [float(x) for x in v]


def write_embeddings_jsonl(series: EmbeddingSeries, path, target: str | None = None) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for d in sorted(series.vectors):
            rec = {"date": d.isoformat(), "vector": _dump_vector(series.vectors[d])}
            if target is not None:
                rec["target"] = target
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_embeddings_jsonl(path, stream: str, dim: int | None = None,
                          target: str | None = None) -> EmbeddingSeries:
    vectors: dict[date, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                d = date.fromisoformat(rec["date"])
                vec = np.asarray(rec["vector"], dtype=np.float64)
            except (ValueError, KeyError, TypeError) as exc:
                raise FormatError(f"{path}:{line_no}: bad record ({exc})") from None
            if target is not None and rec.get("target", target) != target:
                continue
            if dim is None:
                dim = vec.size
            if vec.ndim != 1 or vec.size != dim:
                raise FormatError(f"{path}:{line_no}: vector length {vec.size}, stream expects {dim}")
            if not np.all(np.isfinite(vec)):
                raise FormatError(f"{path}:{line_no}: non-finite vector entries")
            if d in vectors:
                raise FormatError(f"{path}:{line_no}: duplicate date {d}")
            vectors[d] = vec
    return EmbeddingSeries(stream, dim or 0, vectors)


def write_descriptions_jsonl(descriptions: dict[str, np.ndarray], path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for name in sorted(descriptions):
            fh.write(json.dumps({"channel": name, "vector": _dump_vector(descriptions[name])},
                                sort_keys=True) + "\n")


def read_descriptions_jsonl(path, dim: int | None = None) -> dict[str, np.ndarray]:
    out: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                name = str(rec["channel"])
                vec = np.asarray(rec["vector"], dtype=np.float64)
            except (ValueError, KeyError, TypeError) as exc:
                raise FormatError(f"{path}:{line_no}: bad record ({exc})") from None
            if dim is None:
                dim = vec.size
            if vec.size != dim:
                raise FormatError(f"{path}:{line_no}: vector length {vec.size}, expected {dim}")
            if name in out:
                raise FormatError(f"{path}:{line_no}: duplicate channel {name!r}")
            out[name] = vec
    return out
