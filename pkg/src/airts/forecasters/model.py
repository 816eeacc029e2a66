"""Full forecasting model: optional description fusion, routing, base network,
optional TimeMMD-style text head."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date

import numpy as np

from ..autodiff import Module, Tensor, no_grad, ops
from ..autodiff.tensor import ContractError, DimensionError
from ..data.windows import Batch, WindowSample, collate
from ..routing import RoutingModule, RoutingOutput
from .config import ModelConfig
from .nets import FORWARDS, NETS, ChannelFusion, TimeMMDFusion, fuse_channel_descriptions, timemmd_fuse


class ForecastModel(Module):
    def __init__(self, cfg: ModelConfig, seed: int = 0, model_id: str | None = None):
        self.config = cfg
        self.seed = seed
        self.model_id = model_id or cfg.model_id
        rng = np.random.default_rng(seed)
        self.net = NETS[cfg.architecture](cfg, rng)
        self.fusion = None
        if cfg.mode == "air" and cfg.description_dim is not None:
            self.fusion = ChannelFusion(cfg.lookback, cfg.description_dim, cfg.description_proj, rng)
        self.kd_router = None
        self.ol_router = None
        if cfg.air_on_features:
            self.kd_router = RoutingModule(cfg.embedding_dim, self.net.n_feature_routes, cfg.latent, rng,
                                           hidden=cfg.generator_hidden, codebook_size=cfg.codebook_size,
                                           codebook_scale=cfg.codebook_scale,
                                           vq_enabled=cfg.vq_enabled, rescale=cfg.rescale_routing)
        if cfg.air_on_predictor:
            self.ol_router = RoutingModule(cfg.embedding_dim, 1, cfg.latent, rng,
                                           hidden=cfg.generator_hidden, codebook_size=cfg.codebook_size,
                                           codebook_scale=cfg.codebook_scale,
                                           vq_enabled=cfg.vq_enabled, rescale=cfg.rescale_routing)
        self.text_head = None
        if cfg.mode == "timemmd":
            self.text_head = TimeMMDFusion(cfg.embedding_dim, cfg.fusion_hidden, cfg.n_targets,
                                           cfg.horizon, rng)

    def routers(self) -> list[RoutingModule]:
        return [r for r in (self.kd_router, self.ol_router) if r is not None]


@dataclass
class ForwardResult:
    prediction: Tensor                       # (B, n_targets, H)
    aux_loss: Tensor
    routing: dict[str, RoutingOutput] = field(default_factory=dict)


@dataclass
class Forecast:
    values: np.ndarray                       # (n_targets, H), normalised space
    origin: date | None
    model_id: str
    seed: int


def _need(arr, what: str, cfg: ModelConfig):
    if arr is None:
        raise ContractError(f"{cfg.mode}-{cfg.architecture} needs {what} but the sample has none")
    return Tensor(np.asarray(arr, dtype=np.float64))


def forward_batch(model: ForecastModel, batch: Batch) -> ForwardResult:
    cfg = model.config
    x = np.asarray(batch.x, dtype=np.float64)
    if x.ndim != 3 or x.shape[1:] != (cfg.channels, cfg.lookback):
        raise DimensionError(f"lookback batch has shape {x.shape}, expected (B, {cfg.channels}, {cfg.lookback})")
    X = Tensor(x)
    if model.fusion is not None:
        X = fuse_channel_descriptions(model.fusion, X, _need(batch.descriptions, "channel descriptions", cfg))

    routing: dict[str, RoutingOutput] = {}
    aux = Tensor(0.0)
    r_kd = r_ol = None
    if model.kd_router is not None:
        routing["key_driver"] = out = model.kd_router(_need(batch.key_driver, "key-driver embeddings", cfg))
        r_kd = out.weights
        aux = ops.add(aux, out.aux_loss)
    if model.ol_router is not None:
        routing["outlook"] = out = model.ol_router(_need(batch.outlook, "outlook embeddings", cfg))
        r_ol = out.weights
        aux = ops.add(aux, out.aux_loss)

    pred = FORWARDS[cfg.architecture](model.net, X, r_kd, r_ol)
    if model.text_head is not None:
        pred = timemmd_fuse(model.text_head, pred, _need(batch.key_driver, "key-driver embeddings", cfg),
                            _need(batch.outlook, "outlook embeddings", cfg))
    return ForwardResult(pred, aux, routing)


def model_forward(model: ForecastModel, sample: WindowSample) -> Forecast:
    """Single-sample inference (no tape)."""
    with no_grad():
        res = forward_batch(model, collate([sample]))
    values = res.prediction.data[0].copy()
    if not np.all(np.isfinite(values)):
        raise ContractError(f"{model.model_id}: non-finite forecast at origin {sample.origin}")
    return Forecast(values, sample.origin, model.model_id, model.seed)


def predict(model: ForecastModel, batch: Batch) -> np.ndarray:
    with no_grad():
        return forward_batch(model, batch).prediction.data.copy()
