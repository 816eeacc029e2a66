"""Regime-switching multimodal benchmark.

A semi-Markov regime path drives per-regime VAR(1) dynamics around
regime-specific levels. Text streams are synthetic embeddings: the key
driver reveals the current regime, the outlook (in ``oracle`` leak mode)
reveals the majority regime of the coming horizon. Either stream can be
switched to pure noise (leak mode ``none``).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from datetime import date

import numpy as np

from ..errors import ConfigurationError
from .calendar import weekdays
from .embeddings import KEY_DRIVER, OUTLOOK, EmbeddingSeries
from .frame import TimeSeriesFrame

LEAK_MODES = ("oracle", "none")


@dataclass(frozen=True)
class SyntheticSpec:
    channels: int = 8
    targets: int = 2
    length: int = 1200
    regimes: int = 4
    mean_dwell: float = 40.0
    noise: float = 0.1
    embedding_dim: int = 64
    embedding_noise: float = 0.05
    outlook_leak: str = "oracle"
    key_driver_leak: str = "oracle"
    seed: int = 0
    horizon: int = 20
    level_scale: float = 1.0
    start_date: str = "2019-01-01"

    def validate(self) -> None:
        if self.regimes < 2:
            raise ConfigurationError(f"regimes must be >= 2, got {self.regimes}")
        if self.regimes > self.embedding_dim:
            raise ConfigurationError(
                f"regimes ({self.regimes}) must not exceed embedding_dim ({self.embedding_dim})"
            )
        if not 1 <= self.targets <= self.channels:
            raise ConfigurationError(f"targets must be in [1, channels], got {self.targets}")
        for name in ("outlook_leak", "key_driver_leak"):
            if getattr(self, name) not in LEAK_MODES:
                raise ConfigurationError(f"{name} must be one of {LEAK_MODES}")
        if self.mean_dwell < 1 or self.length < 2:
            raise ConfigurationError("mean_dwell must be >= 1 and length >= 2")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SyntheticData:
    frame: TimeSeriesFrame
    key_driver: EmbeddingSeries
    outlook: EmbeddingSeries
    descriptions: dict[str, np.ndarray]
    regimes: np.ndarray                   # (N,) regime index per step
    transition: list[np.ndarray] = field(default_factory=list)
    levels: np.ndarray | None = None      # (R, C)
    target_indices: list[int] = field(default_factory=list)


def _regime_path(rng: np.random.Generator, n: int, r: int, mean_dwell: float) -> np.ndarray:
    path = np.empty(n, dtype=np.int64)
    state = int(rng.integers(r))
    t = 0
    while t < n:
        dwell = int(rng.geometric(1.0 / mean_dwell))
        path[t:t + dwell] = state
        t += dwell
        state = int((state + rng.integers(1, r)) % r)   # switch to a different regime
    return path


def _stable_matrix(rng: np.random.Generator, c: int, radius: float = 0.9) -> np.ndarray:
    a = rng.normal(size=(c, c))
    return a * (radius / np.max(np.abs(np.linalg.eigvals(a))))


def _orthonormal(rng: np.random.Generator, d: int, r: int) -> np.ndarray:
    q, _ = np.linalg.qr(rng.normal(size=(d, r)))
    return q


def _noise_embeddings(rng: np.random.Generator, n: int, d: int, noise: float) -> np.ndarray:
    # same scale as an informative vector (unit norm on average) but carries nothing
    return rng.normal(scale=1.0 / np.sqrt(d), size=(n, d)) + noise * rng.normal(size=(n, d))


def future_majority(regimes: np.ndarray, horizon: int, n_regimes: int) -> np.ndarray:
    """Most frequent regime over ``(t, t+horizon]`` (lowest index on ties);
    the last step, with nothing ahead, reuses its own regime."""
    n = regimes.size
    out = np.empty(n, dtype=np.int64)
    for t in range(n):
        ahead = regimes[t + 1: t + 1 + horizon]
        if ahead.size == 0:
            out[t] = regimes[t]
        else:
            out[t] = int(np.argmax(np.bincount(ahead, minlength=n_regimes)))
    return out


def synth_generate(spec: SyntheticSpec) -> SyntheticData:
    spec.validate()
    streams = np.random.SeedSequence(spec.seed).spawn(6)
    rng_path, rng_var, rng_noise, rng_kd, rng_ol, rng_desc = (np.random.default_rng(s) for s in streams)
    C, N, R, D = spec.channels, spec.length, spec.regimes, spec.embedding_dim

    regimes = _regime_path(rng_path, N, R, spec.mean_dwell)
    mats = [_stable_matrix(rng_var, C) for _ in range(R)]
    levels = rng_var.normal(scale=spec.level_scale, size=(R, C))

    x = np.empty((C, N))
    x[:, 0] = levels[regimes[0]] + spec.noise * rng_noise.normal(size=C)
    for t in range(1, N):
        k = regimes[t]
        x[:, t] = levels[k] + mats[k] @ (x[:, t - 1] - levels[k]) + spec.noise * rng_noise.normal(size=C)

    dates = weekdays(date.fromisoformat(spec.start_date), N)
    channels = [f"ch{i}" for i in range(C)]
    frame = TimeSeriesFrame(dates, channels, x)

    eye = np.eye(R)
    o_kd = _orthonormal(rng_kd, D, R)
    if spec.key_driver_leak == "oracle":
        kd_vecs = (o_kd @ eye[regimes].T).T + spec.embedding_noise * rng_kd.normal(size=(N, D))
    else:
        kd_vecs = _noise_embeddings(rng_kd, N, D, spec.embedding_noise)

    o_ol = _orthonormal(rng_ol, D, R)
    if spec.outlook_leak == "oracle":
        ahead = future_majority(regimes, spec.horizon, R)
        ol_vecs = (o_ol @ eye[ahead].T).T + spec.embedding_noise * rng_ol.normal(size=(N, D))
    else:
        ol_vecs = _noise_embeddings(rng_ol, N, D, spec.embedding_noise)

    key_driver = EmbeddingSeries(KEY_DRIVER, D, {d: kd_vecs[i] for i, d in enumerate(dates)})
    outlook = EmbeddingSeries(OUTLOOK, D, {d: ol_vecs[i] for i, d in enumerate(dates)})

    desc = rng_desc.normal(size=(C, D))
    desc /= np.linalg.norm(desc, axis=1, keepdims=True)
    descriptions = {name: desc[i] for i, name in enumerate(channels)}

    return SyntheticData(frame, key_driver, outlook, descriptions, regimes, mats, levels,
                         list(range(spec.targets)))
