"""Per-origin evaluation and aggregation over seeds and retrain points."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..data.windows import WindowSample, collate
from ..forecasters.model import ForecastModel, predict


class AggregationError(ValueError):
    pass


@dataclass(frozen=True)
class Leaf:
    """Test MSE of one (model, target, retrain point, seed) run."""

    model: str
    target: str
    point: str
    seed: int
    mse: float
    n_origins: int

    def to_dict(self) -> dict:
        return {"model": self.model, "target": self.target, "point": self.point, "seed": self.seed,
                "mse": self.mse, "n_origins": self.n_origins}


def per_origin_errors(pred: np.ndarray, truth: np.ndarray) -> np.ndarray:
    """``(n_origins, n_targets)`` MSE over the horizon."""
    if pred.shape != truth.shape:
        raise ValueError(f"prediction {pred.shape} and truth {truth.shape} differ")
    return np.mean((pred - truth) ** 2, axis=-1)


def evaluate_point(model: ForecastModel, samples: Sequence[WindowSample]) -> tuple[np.ndarray, np.ndarray]:
    """Forecasts ``(n, targets, H)`` and per-origin MSE ``(n, targets)`` in normalised space."""
    if not samples:
        raise ValueError("no evaluable origins")
    batch = collate(samples)
    pred = predict(model, batch)
    return pred, per_origin_errors(pred, batch.y)


@dataclass
class MetricsReport:
    leaves: list[Leaf]
    aggregate: dict[str, dict[str, float]]          # model -> target -> mean; target "mean" averages targets
    per_point: dict[str, dict[str, dict[str, float]]] = field(default_factory=dict)  # model -> target -> point
    relative: dict[str, dict[str, float]] = field(default_factory=dict)  # model -> target -> % change vs baseline
    baseline: str | None = None
    metadata: dict = field(default_factory=dict)
    forecasts: list[dict] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    failed: list[dict] = field(default_factory=list)   # diverged runs

    @property
    def models(self) -> list[str]:
        return list(self.aggregate)

    @property
    def targets(self) -> list[str]:
        first = next(iter(self.aggregate.values()), {})
        return [t for t in first if t != "mean"]


def relative_change(value: float, baseline: float) -> float:
    """Percent change of ``value`` relative to ``baseline`` (negative = lower error)."""
    return 100.0 * (value - baseline) / baseline


def aggregate(leaves: Sequence[Leaf], baseline: str | None = None) -> MetricsReport:
    """Mean over seeds within each point, then unweighted mean over points."""
    if not leaves:
        raise AggregationError("nothing to aggregate")
    grid: dict = defaultdict(lambda: defaultdict(lambda: defaultdict(list)))
    seen = set()
    for leaf in leaves:
        key = (leaf.model, leaf.target, leaf.point, leaf.seed)
        if key in seen:
            raise AggregationError(f"duplicate leaf {key}")
        seen.add(key)
        grid[leaf.model][leaf.target][leaf.point].append(leaf.mse)

    models = list(dict.fromkeys(leaf.model for leaf in leaves))
    targets = list(dict.fromkeys(leaf.target for leaf in leaves))
    points = list(dict.fromkeys(leaf.point for leaf in leaves))
    seeds = sorted({leaf.seed for leaf in leaves})
    for m in models:
        for t in targets:
            if set(grid[m][t]) != set(points):
                raise AggregationError(f"{m}/{t}: retrain points differ from the other runs")
            for p in points:
                if len(grid[m][t][p]) != len(seeds):
                    raise AggregationError(f"{m}/{t}/{p}: expected {len(seeds)} seeds, got {len(grid[m][t][p])}")

    agg, per_point = {}, {}
    for m in models:
        agg[m], per_point[m] = {}, {}
        for t in targets:
            per_point[m][t] = {p: float(np.mean(grid[m][t][p])) for p in points}
            agg[m][t] = float(np.mean([per_point[m][t][p] for p in points]))
        agg[m]["mean"] = float(np.mean([agg[m][t] for t in targets]))

    rel = {}
    if baseline is not None:
        if baseline not in agg:
            raise AggregationError(f"baseline model {baseline!r} not among {models}")
        rel = {m: {t: relative_change(agg[m][t], agg[baseline][t]) for t in agg[m]} for m in models}
    return MetricsReport(list(leaves), agg, per_point, rel, baseline)


def seed_means(leaves: Sequence[Leaf], model: str) -> dict[int, float]:
    """Per-seed mean over points and targets, for seed-wise comparisons."""
    by_seed: dict = defaultdict(lambda: defaultdict(list))
    for leaf in leaves:
        if leaf.model == model:
            by_seed[leaf.seed][leaf.target].append(leaf.mse)
    return {s: float(np.mean([np.mean(v) for v in by_t.values()])) for s, by_t in sorted(by_seed.items())}
