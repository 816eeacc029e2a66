"""Single-file checkpoints: magic, header length, JSON header, float64 payload.

Layout::

    b"AIRTSCK1" | uint64 LE header length | UTF-8 JSON header | <f8 values

The header carries the model config and a manifest of ``(name, shape)`` in
payload order.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import FormatError
from .config import ModelConfig
from .model import ForecastModel

MAGIC = b"AIRTSCK1"


def save_checkpoint(model: ForecastModel, path) -> None:
    named = list(model.named_parameters())
    header = {
        "config": model.config.to_dict(),
        "model_id": model.model_id,
        "seed": model.seed,
        "manifest": [[name, list(p.shape)] for name, p in named],
    }
    raw = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    payload = b"".join(np.ascontiguousarray(p.data, dtype="<f8").tobytes() for _, p in named)
    Path(path).write_bytes(MAGIC + struct.pack("<Q", len(raw)) + raw + payload)


def load_checkpoint(path) -> ForecastModel:
    blob = Path(path).read_bytes()
    if blob[:8] != MAGIC:
        raise FormatError(f"{path}: not a checkpoint (bad magic)")
    if len(blob) < 16:
        raise FormatError(f"{path}: truncated header")
    (n,) = struct.unpack("<Q", blob[8:16])
    try:
        header = json.loads(blob[16:16 + n].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: corrupt header ({exc})") from None
    cfg = ModelConfig.from_dict(header["config"])
    model = ForecastModel(cfg, seed=header["seed"], model_id=header["model_id"])
    expected = [[name, list(p.shape)] for name, p in model.named_parameters()]
    if expected != header["manifest"]:
        raise FormatError(f"{path}: parameter manifest does not match the configured model")
    offset = 16 + n
    state = {}
    for name, shape in header["manifest"]:
        count = int(np.prod(shape))
        end = offset + 8 * count
        if end > len(blob):
            raise FormatError(f"{path}: payload truncated at parameter {name}")
        state[name] = np.frombuffer(blob[offset:end], dtype="<f8").reshape(shape).astype(np.float64)
        offset = end
    if offset != len(blob):
        raise FormatError(f"{path}: {len(blob) - offset} trailing bytes after payload")
    model.load_state_dict(state)
    return model
