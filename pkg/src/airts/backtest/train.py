"""Mini-batch Adam training with the VQ auxiliary loss and early stopping."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from typing import Sequence

import numpy as np

from ..autodiff import Adam, Tensor, backward, current_tape, no_grad, ops
from ..data.windows import WindowSample, collate
from ..errors import ConfigurationError
from ..forecasters.model import ForecastModel, forward_batch


class TrainingDivergence(RuntimeError):
    def __init__(self, epoch: int, message: str):
        super().__init__(f"epoch {epoch}: {message}")
        self.epoch = epoch


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-4
    max_epochs: int = 40
    batch_size: int = 32
    seeds: tuple[int, ...] = (0, 1, 2)
    vq_weight: float = 1.0
    patience: int = 5
    min_delta: float = 1e-6
    codebook_lr_scale: float = 1.0        # learning-rate multiplier for codebook entries

    def __post_init__(self):
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not 1 <= self.max_epochs <= 40:
            raise ConfigurationError(f"max_epochs must be in [1, 40], got {self.max_epochs}")
        if not self.seeds:
            raise ConfigurationError("need at least one seed")
        if self.lr <= 0 or self.batch_size < 1 or self.patience < 1 or self.vq_weight < 0:
            raise ConfigurationError("lr, batch_size, patience must be positive and vq_weight >= 0")
        if self.codebook_lr_scale <= 0:
            raise ConfigurationError("codebook_lr_scale must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["seeds"] = list(self.seeds)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigurationError(f"unknown train config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class TrainResult:
    train_loss: list[float] = field(default_factory=list)     # mean objective per epoch
    val_loss: list[float] = field(default_factory=list)       # forecast MSE on the validation set
    best_epoch: int = 0
    epochs_run: int = 0


def objective(model: ForecastModel, batch, vq_weight: float) -> tuple[Tensor, Tensor]:
    res = forward_batch(model, batch)
    mse = ops.mse_loss(res.prediction, Tensor(batch.y))
    if vq_weight == 0.0:
        return mse, mse
    return ops.add(mse, ops.scale(res.aux_loss, vq_weight)), mse


def evaluate_mse(model: ForecastModel, samples: Sequence[WindowSample], batch_size: int = 256) -> float:
    """Mean squared error over all samples (equal weight per sample)."""
    total, n = 0.0, 0
    with no_grad():
        for i in range(0, len(samples), batch_size):
            batch = collate(samples[i:i + batch_size])
            pred = forward_batch(model, batch).prediction.data
            total += float(np.sum((pred - batch.y) ** 2))
            n += batch.y.size
    return total / n


def run_training(model: ForecastModel, samples: Sequence[WindowSample], cfg: TrainConfig,
                 seed: int, val_samples: Sequence[WindowSample] | None = None) -> TrainResult:
    """Train in place; parameters of the best validation epoch are restored.

    The validation set defaults to the training set. Shuffling is driven by
    ``seed``; parameter init is fixed when the model is built.
    """
    if not samples:
        raise ConfigurationError("run_training needs at least one sample")
    val = samples if val_samples is None else val_samples
    rng = np.random.default_rng(seed)
    params = model.parameters()
    codebooks = {id(r.codebook.entries) for r in model.routers() if r.codebook is not None}
    opt = Adam(params, lr=cfg.lr,
               lr_scales=[cfg.codebook_lr_scale if id(p) in codebooks else 1.0 for p in params])
    tape = current_tape()
    result = TrainResult()
    best, best_state, stale = np.inf, model.state_dict(), 0

    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(len(samples))
        losses = []
        for start in range(0, len(order), cfg.batch_size):
            batch = collate([samples[j] for j in order[start:start + cfg.batch_size]])
            tape.clear()
            opt.zero_grad()
            loss, _ = objective(model, batch, cfg.vq_weight)
            value = loss.item()
            if not np.isfinite(value):
                tape.clear()
                raise TrainingDivergence(epoch, f"loss became {value}")
            backward(loss)
            opt.step()
            losses.append(value)
        result.train_loss.append(float(np.mean(losses)))
        v = evaluate_mse(model, val)
        if not np.isfinite(v):
            raise TrainingDivergence(epoch, f"validation loss became {v}")
        result.val_loss.append(v)
        result.epochs_run = epoch
        if v < best - cfg.min_delta:
            best, best_state, stale = v, model.state_dict(), 0
            result.best_epoch = epoch
        else:
            stale += 1
            if stale >= cfg.patience:
                break
    model.load_state_dict(best_state)
    return result
