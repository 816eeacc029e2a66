"""Rolling-retrain backtest: per retrain point, normalise on the past, train
each model for each seed, forecast the point's origins."""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Sequence

import numpy as np

from ..data.embeddings import EmbeddingSeries
from ..data.frame import TimeSeriesFrame
from ..data.normalize import zscore_apply, zscore_fit
from ..data.windows import WindowSample, build_windows
from ..errors import ConfigurationError
from ..forecasters.config import config_for_model_id
from ..forecasters.model import ForecastModel
from .evaluate import Leaf, MetricsReport, aggregate, evaluate_point
from .schedule import BacktestSchedule, RetrainPoint, build_biweekly_schedule
from .train import TrainConfig, TrainingDivergence, run_training

log = logging.getLogger(__name__)


@dataclass
class Dataset:
    frame: TimeSeriesFrame                       # raw (un-normalised), no missing values
    key_driver: EmbeddingSeries | None
    outlook: EmbeddingSeries | None
    descriptions: dict[str, np.ndarray] | None
    target_indices: list[int]

    @property
    def target_names(self) -> list[str]:
        return [self.frame.channels[i] for i in self.target_indices]

    @property
    def embedding_dim(self) -> int | None:
        for s in (self.key_driver, self.outlook):
            if s is not None and s.dim is not None:
                return s.dim
        return None

    @property
    def description_dim(self) -> int | None:
        if not self.descriptions:
            return None
        return int(next(iter(self.descriptions.values())).shape[0])


@dataclass(frozen=True)
class BacktestConfig:
    start: str = "2022-W01"
    years: int = 3
    points: int | None = None            # keep only the first N retrain points
    models: tuple[str, ...] = ("vanilla-tsmixer", "air-tsmixer")
    baseline: str | None = None          # defaults to the first model
    lookback: int = 20
    horizon: int = 20
    workers: int = 1
    model_overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "models", tuple(self.models))
        if not self.models:
            raise ConfigurationError("backtest needs at least one model")
        if self.points is not None and self.points < 1:
            raise ConfigurationError("points must be >= 1")
        if self.baseline is not None and self.baseline not in self.models:
            raise ConfigurationError(f"baseline {self.baseline!r} is not one of the models")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["models"] = list(self.models)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "BacktestConfig":
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigurationError(f"unknown backtest config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class PointData:
    point: RetrainPoint
    train: list[WindowSample]
    test: list[WindowSample]
    skipped: list[tuple]


def prepare_point(ds: Dataset, point: RetrainPoint, T: int, H: int) -> PointData:
    """Windows for one retrain point. Statistics and training windows use only
    rows dated strictly before the cutoff."""
    dates = ds.frame.dates
    cut = sum(1 for d in dates if d < point.cutoff)
    z = zscore_fit(ds.frame, point.cutoff)
    norm = zscore_apply(ds.frame, z)
    train_origins = [dates[i] for i in range(T, cut - H + 1)]
    train, _ = build_windows(norm, ds.key_driver, ds.outlook, ds.descriptions, train_origins,
                             ds.target_indices, T=T, H=H)
    test, skipped = build_windows(norm, ds.key_driver, ds.outlook, ds.descriptions, point.origins,
                                  ds.target_indices, T=T, H=H)
    return PointData(point, train, test, skipped)


def _model_config(model_id: str, ds: Dataset, cfg: BacktestConfig):
    over = dict(cfg.model_overrides)
    over.setdefault("lookback", cfg.lookback)
    over.setdefault("horizon", cfg.horizon)
    if ds.embedding_dim is not None:
        over.setdefault("embedding_dim", ds.embedding_dim)
    if ds.description_dim is not None:
        over.setdefault("description_dim", ds.description_dim)
    return config_for_model_id(model_id, len(ds.frame.channels), ds.target_indices, **over)


@dataclass
class RunOutput:
    model: str
    point: str
    seed: int
    mse: np.ndarray | None           # (n_origins, n_targets); None when training diverged
    forecasts: np.ndarray | None     # (n_origins, n_targets, H)
    epochs: int
    failure: str | None = None


def _run_one(args) -> RunOutput:
    model_id, mcfg, pdata, tcfg, seed = args
    model = ForecastModel(mcfg, seed=seed, model_id=model_id)
    if not pdata.train:
        raise ConfigurationError(f"{pdata.point.label}: no training windows before {pdata.point.cutoff}")
    try:
        res = run_training(model, pdata.train, tcfg, seed=seed)
    except TrainingDivergence as exc:
        return RunOutput(model_id, pdata.point.label, seed, None, None, exc.epoch, str(exc))
    pred, err = evaluate_point(model, pdata.test)
    return RunOutput(model_id, pdata.point.label, seed, err, pred, res.epochs_run)


def config_hash(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def run_backtest(ds: Dataset, cfg: BacktestConfig, tcfg: TrainConfig,
                 schedule: BacktestSchedule | None = None, data_tag: dict | None = None) -> MetricsReport:
    if schedule is None:
        schedule = build_biweekly_schedule(cfg.start, cfg.years, ds.frame.dates, horizon=cfg.horizon)
    points = schedule.points[: cfg.points] if cfg.points else schedule.points
    if not points:
        raise ConfigurationError("schedule has no retrain points inside the data")
    mcfgs = {m: _model_config(m, ds, cfg) for m in cfg.models}
    # schedule warnings about points past the kept range are noise; ISO labels sort in time order
    last = points[-1].label
    warnings = [w for w in schedule.warnings if w.split(":", 1)[0] <= last]

    jobs, prepared = [], []
    for point in points:
        pdata = prepare_point(ds, point, cfg.lookback, cfg.horizon)
        for d, why in pdata.skipped:
            warnings.append(f"{point.label}: origin {d} skipped ({why})")
        if not pdata.test:
            warnings.append(f"{point.label}: no evaluable origins, point dropped")
            continue
        prepared.append(pdata)
        for m in cfg.models:
            for s in tcfg.seeds:
                jobs.append((m, mcfgs[m], pdata, tcfg, s))
    if not jobs:
        raise ConfigurationError("no retrain point has evaluable origins")

    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            outputs = list(pool.map(_run_one, jobs))
    else:
        outputs = []
        for job in jobs:
            outputs.append(_run_one(job))
            o = outputs[-1]
            if o.failure is None:
                log.info("%s %s seed=%d epochs=%d mse=%.5f", o.point, o.model, o.seed, o.epochs, float(o.mse.mean()))

    # a model with any diverged run is reported as failed rather than averaged over fewer runs
    failed = [{"model": o.model, "point": o.point, "seed": o.seed, "epoch": o.epochs, "error": o.failure}
              for o in outputs if o.failure is not None]
    bad_models = {f["model"] for f in failed}
    good = [o for o in outputs if o.model not in bad_models]
    names = ds.target_names
    leaves = [Leaf(o.model, names[k], o.point, o.seed, float(o.mse[:, k].mean()), int(o.mse.shape[0]))
              for o in good for k in range(len(names))]
    baseline = cfg.baseline or cfg.models[0]
    if leaves:
        report = aggregate(leaves, baseline=baseline if baseline not in bad_models else None)
    else:
        report = MetricsReport([], {})
    report.failed = failed
    report.warnings = warnings
    report.forecasts = _plot_records(prepared, good, names, ds.target_indices)
    dates = ds.frame.dates
    payload = {"backtest": cfg.to_dict(), "train": tcfg.to_dict(),
               "models": {m: c.to_dict() for m, c in mcfgs.items()}, "data": data_tag or {}}
    h = config_hash(payload)
    report.metadata = {
        "config": payload,
        "config_hash": h,
        "run_id": h[:12],
        # data-derived stamps keep the report reproducible byte for byte
        "data_start": dates[0].isoformat(),
        "data_end": dates[-1].isoformat(),
        "first_cutoff": points[0].cutoff.isoformat(),
        "last_cutoff": points[-1].cutoff.isoformat(),
        "n_points": len(prepared),
        "targets": names,
    }
    return report


def _plot_records(prepared: Sequence[PointData], outputs: Sequence[RunOutput], names,
                  target_indices) -> list[dict]:
    """Seed-mean forecasts for every evaluated origin and target."""
    by_key: dict = {}
    for o in outputs:
        by_key.setdefault((o.point, o.model), []).append(o.forecasts)
    models = list(dict.fromkeys(o.model for o in outputs))
    records = []
    for pdata in prepared:
        label = pdata.point.label
        means = {m: np.mean(by_key[(label, m)], axis=0) for m in models if (label, m) in by_key}
        for j, sample in enumerate(pdata.test):
            for k, name in enumerate(names):
                records.append({
                    "target": name,
                    "point": label,
                    "origin": sample.origin.isoformat(),
                    "lookback": [float(v) for v in sample.x[target_indices[k]]],
                    "truth": [float(v) for v in sample.y[k]],
                    "forecasts": {m: [float(v) for v in f[j, k]] for m, f in means.items()},
                })
    return records
