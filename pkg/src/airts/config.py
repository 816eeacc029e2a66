"""The JSON run configuration shared by the CLI subcommands."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

from .backtest import BacktestConfig, Dataset, TrainConfig
from .data import (
    SyntheticSpec,
    linear_interpolate_missing,
    load_series_csv,
    read_descriptions_jsonl,
    read_embeddings_jsonl,
    synth_generate,
)
from .data.embeddings import KEY_DRIVER, OUTLOOK
from .errors import ConfigurationError
from .forecasters import ModelConfig
from .refinery import BackendConfig, DomainConfig

MODEL_KEYS_FROM_ID = {"architecture", "mode", "channels", "targets"}
MAX_WORKERS = 8


def _reject_unknown(d: dict, allowed, where: str) -> None:
    if not isinstance(d, dict):
        raise ConfigurationError(f"{where} must be a JSON object")
    unknown = set(d) - set(allowed)
    if unknown:
        raise ConfigurationError(f"unknown keys in {where}: {sorted(unknown)}")


@dataclass(frozen=True)
class DataPaths:
    series: str
    targets: list
    key_driver: str | None = None
    outlook: str | None = None
    descriptions: str | None = None
    embedding_target: str | None = None   # pick rows with this "target" field from per-target files

    @classmethod
    def from_dict(cls, d: dict) -> "DataPaths":
        _reject_unknown(d, {f.name for f in fields(cls)}, "dataset.paths")
        if "series" not in d or "targets" not in d:
            raise ConfigurationError("dataset.paths needs 'series' and 'targets'")
        return cls(**d)


@dataclass(frozen=True)
class RefinerySection:
    chat: BackendConfig = field(default_factory=BackendConfig)
    embedding: BackendConfig = field(default_factory=lambda: BackendConfig(path="/embeddings"))
    domain: DomainConfig = field(default_factory=DomainConfig)
    embedding_dim: int = 64            # used by the hash mock

    @classmethod
    def from_dict(cls, d: dict) -> "RefinerySection":
        _reject_unknown(d, {f.name for f in fields(cls)}, "refinery")
        kw = {}
        if "chat" in d:
            kw["chat"] = BackendConfig.from_dict(d["chat"])
        if "embedding" in d:
            kw["embedding"] = BackendConfig.from_dict(d["embedding"])
        if "domain" in d:
            kw["domain"] = DomainConfig.from_dict(d["domain"])
        if "embedding_dim" in d:
            kw["embedding_dim"] = int(d["embedding_dim"])
        return cls(**kw)


@dataclass(frozen=True)
class RunConfig:
    synthetic: SyntheticSpec | None = None
    paths: DataPaths | None = None
    model: dict = field(default_factory=dict)
    training: TrainConfig = field(default_factory=TrainConfig)
    backtest: dict = field(default_factory=dict)
    refinery: RefinerySection = field(default_factory=RefinerySection)
    output: str = "runs/default"

    SECTIONS = ("dataset", "model", "training", "backtest", "refinery", "output")

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        _reject_unknown(d, cls.SECTIONS, "run config")
        ds = d.get("dataset", {"synthetic": {}})
        _reject_unknown(ds, {"synthetic", "paths"}, "dataset")
        if ("synthetic" in ds) == ("paths" in ds):
            raise ConfigurationError("dataset needs exactly one of 'synthetic' or 'paths'")
        synthetic = paths = None
        if "synthetic" in ds:
            _reject_unknown(ds["synthetic"], {f.name for f in fields(SyntheticSpec)}, "dataset.synthetic")
            synthetic = SyntheticSpec(**ds["synthetic"])
            synthetic.validate()
        else:
            paths = DataPaths.from_dict(ds["paths"])
        model = d.get("model", {})
        _reject_unknown(model, {f.name for f in fields(ModelConfig)} - MODEL_KEYS_FROM_ID, "model")
        training = TrainConfig.from_dict(d.get("training", {}))
        bt = d.get("backtest", {})
        _reject_unknown(bt, {f.name for f in fields(BacktestConfig)} - {"model_overrides"}, "backtest")
        refinery = RefinerySection.from_dict(d.get("refinery", {}))
        output = d.get("output", "runs/default")
        if not isinstance(output, str) or not output:
            raise ConfigurationError("output must be a non-empty path string")
        return cls(synthetic, paths, dict(model), training, dict(bt), refinery, output)

    def backtest_config(self, models: list[str] | None = None) -> BacktestConfig:
        bt = dict(self.backtest)
        if models:
            bt["models"] = list(models)
        bt.setdefault("workers", min(os.cpu_count() or 1, MAX_WORKERS))
        return BacktestConfig.from_dict({**bt, "model_overrides": dict(self.model)})

    def data_tag(self) -> dict:
        if self.synthetic is not None:
            return {"synthetic": self.synthetic.to_dict()}
        return {"paths": {k: v for k, v in self.paths.__dict__.items()}}

    def load_dataset(self) -> Dataset:
        if self.synthetic is not None:
            data = synth_generate(self.synthetic)
            return Dataset(data.frame, data.key_driver, data.outlook, data.descriptions, data.target_indices)
        p = self.paths
        frame = linear_interpolate_missing(load_series_csv(p.series))
        missing = [t for t in p.targets if t not in frame.channels]
        if missing:
            raise ConfigurationError(f"targets {missing} are not columns of {p.series}")
        kd = read_embeddings_jsonl(p.key_driver, KEY_DRIVER, target=p.embedding_target) if p.key_driver else None
        ol = read_embeddings_jsonl(p.outlook, OUTLOOK, target=p.embedding_target) if p.outlook else None
        desc = read_descriptions_jsonl(p.descriptions) if p.descriptions else None
        return Dataset(frame, kd, ol, desc, [frame.channels.index(t) for t in p.targets])


def load_run_config(path) -> RunConfig:
    """Parse a run configuration file; ``None`` gives the all-defaults synthetic setup."""
    if path is None:
        return RunConfig.from_dict({})
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    try:
        return RunConfig.from_dict(raw)
    except TypeError as exc:
        raise ConfigurationError(f"{path}: {exc}") from None
