"""Base forecasting networks and their routed counterparts.

All forwards take a batched lookback ``X`` of shape ``(B, C, T)`` and return
``(B, n_targets, H)``. Routing arguments are lists of ``(B, L)`` weight
tensors, one per routed layer in the order the layers are applied; ``None``
means the network has no routed layers of that kind.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..autodiff import Module, Tensor, ops, zeros_param
from ..autodiff.tensor import ContractError, DimensionError
from ..layers import CausalConv1d, Dense, RoutedConv1d, RoutedDense, RoutedLatentAttention, SelfAttention
from .config import ModelConfig


def _zero_output(layer) -> None:
    """Start a predictor at the zero forecast (the training mean in z-space)."""
    (layer.W2 if isinstance(layer, RoutedDense) else layer.W).data[...] = 0.0


def _check_routing(kind: str, n_routed: int, r: Sequence[Tensor] | None) -> list:
    if n_routed == 0:
        if r is not None:
            raise ContractError(f"{kind} routing supplied but the network has no routed {kind} layers")
        return []
    if r is None:
        raise ContractError(f"network has {n_routed} routed {kind} layers but no {kind} routing was supplied")
    r = list(r)
    if len(r) != n_routed:
        raise ContractError(f"expected {n_routed} {kind} routing vectors, got {len(r)}")
    return r


def _apply(layer, x: Tensor, r_iter) -> Tensor:
    if isinstance(layer, (RoutedDense, RoutedConv1d, RoutedLatentAttention)):
        return layer(x, next(r_iter))
    return layer(x)


class ChannelFusion(Module):
    """Project each channel's description to ``q`` dims, append it to the
    channel's lookback and map ``T + q -> T`` with one shared FC layer.

    Starts as the identity on the series and ignores the description block.
    """

    def __init__(self, lookback: int, desc_dim: int, q: int, rng: np.random.Generator):
        self.lookback, self.desc_dim, self.q = lookback, desc_dim, q
        bound = np.sqrt(6.0 / (desc_dim + q))
        self.P = Tensor(rng.uniform(-bound, bound, size=(desc_dim, q)), requires_grad=True)
        w = np.zeros((lookback, lookback + q))
        w[:, :lookback] = np.eye(lookback)
        self.W = Tensor(w, requires_grad=True)
        self.b = zeros_param((lookback,))


def fuse_channel_descriptions(fusion: ChannelFusion, X: Tensor, desc: Tensor) -> Tensor:
    """``X`` (B, C, T) or (C, T); ``desc`` (C, D) or (B, C, D)."""
    single = X.ndim == 2
    if single:
        X = ops.reshape(X, (1,) + X.shape)
    b, c, t = X.shape
    if desc.ndim == 2:
        desc = ops.reshape(desc, (1,) + desc.shape)
    if desc.shape[-2] != c or desc.shape[-1] != fusion.desc_dim:
        raise DimensionError(f"descriptions {desc.shape} do not match {c} channels of dim {fusion.desc_dim}")
    proj = ops.matmul(desc, fusion.P)                         # (1|B, C, q)
    if proj.shape[0] != b:
        proj = ops.add(proj, Tensor(np.zeros((b, c, fusion.q))))
    joined = ops.concat([X, proj], axis=-1)                   # (B, C, T + q)
    out = ops.add(ops.matmul(joined, ops.transpose(fusion.W)), fusion.b)
    return ops.reshape(out, (c, t)) if single else out


# TSMixer

class TSMixerNet(Module):
    def __init__(self, cfg: ModelConfig, rng: np.random.Generator):
        T, C, H, L, nt = cfg.lookback, cfg.channels, cfg.horizon, cfg.latent, cfg.n_targets
        self.targets = list(cfg.targets)
        self.time_mix, self.feature_mix = [], []
        for _ in range(cfg.blocks):
            if cfg.air_on_features:
                self.time_mix.append(RoutedDense(T, T, L, rng))
                self.feature_mix.append(RoutedDense(C, C, L, rng))
            else:
                self.time_mix.append(Dense(T, T, rng))
                self.feature_mix.append(Dense(C, C, rng))
        if cfg.air_on_predictor:
            self.predictor = RoutedDense(T, H, L, rng, groups=nt)
        else:
            self.predictor = Dense(T, H, rng, groups=nt)
        _zero_output(self.predictor)

    @property
    def n_feature_routes(self) -> int:
        return sum(isinstance(m, RoutedDense) for m in self.time_mix + self.feature_mix)


def tsmixer_forward(net: TSMixerNet, X: Tensor, r_kd=None, r_ol=None) -> Tensor:
    r_kd = iter(_check_routing("feature", net.n_feature_routes, r_kd))
    r_ol = iter(_check_routing("predictor", int(isinstance(net.predictor, RoutedDense)), r_ol))
    h = X
    for tm, fm in zip(net.time_mix, net.feature_mix):
        h = ops.add(h, ops.relu(_apply(tm, h, r_kd)))                       # mixes along T
        hs = ops.transpose(h)
        h = ops.transpose(ops.add(hs, ops.relu(_apply(fm, hs, r_kd))))     # mixes along C
    sel = ops.getitem(h, (slice(None), net.targets))                       # (B, nt, T)
    return _apply(net.predictor, sel, r_ol)


# TCN

class TCNNet(Module):
    def __init__(self, cfg: ModelConfig, rng: np.random.Generator):
        C, L, nt, H = cfg.channels, cfg.latent, cfg.n_targets, cfg.horizon
        self.n_targets, self.horizon = nt, H
        if cfg.air_on_features:
            self.convs = [RoutedConv1d(C, C, L, cfg.kernel, d, rng) for d in cfg.dilations]
        else:
            self.convs = [CausalConv1d(C, C, cfg.kernel, d, rng) for d in cfg.dilations]
        if cfg.air_on_predictor:
            self.predictor = RoutedDense(C, nt * H, L, rng)
        else:
            self.predictor = Dense(C, nt * H, rng)
        _zero_output(self.predictor)

    @property
    def n_feature_routes(self) -> int:
        return sum(isinstance(m, RoutedConv1d) for m in self.convs)

    @property
    def receptive_field(self) -> int:
        k = self.convs[0].K_in.shape[-1] if isinstance(self.convs[0], RoutedConv1d) else self.convs[0].K.shape[-1]
        return 1 + (k - 1) * sum(c.dilation for c in self.convs)


def tcn_features(net: TCNNet, X: Tensor, r_kd=None) -> Tensor:
    """Hidden state at the last time step, ``(B, C)``."""
    r_kd = iter(_check_routing("feature", net.n_feature_routes, r_kd))
    h = X
    for conv in net.convs:
        h = ops.add(h, ops.relu(_apply(conv, h, r_kd)))
    return ops.getitem(h, (slice(None), slice(None), -1))


def tcn_forward(net: TCNNet, X: Tensor, r_kd=None, r_ol=None) -> Tensor:
    r_ol = iter(_check_routing("predictor", int(isinstance(net.predictor, RoutedDense)), r_ol))
    feats = tcn_features(net, X, r_kd)
    out = _apply(net.predictor, feats, r_ol)
    return ops.reshape(out, (out.shape[0], net.n_targets, net.horizon))


# iTransformer

class ITransformerNet(Module):
    def __init__(self, cfg: ModelConfig, rng: np.random.Generator):
        T, d, H, L, nt = cfg.lookback, cfg.d_model, cfg.horizon, cfg.latent, cfg.n_targets
        self.targets = list(cfg.targets)
        self.embed = Dense(T, d, rng)
        self.attn, self.ffn_in, self.ffn_out = [], [], []
        for _ in range(cfg.blocks):
            if cfg.air_on_features:
                self.attn.append(RoutedLatentAttention(d, d, d, L, rng, heads=cfg.heads))
            else:
                self.attn.append(SelfAttention(d, d, d, rng, heads=cfg.heads))
            self.ffn_in.append(Dense(d, cfg.ffn_hidden, rng))
            self.ffn_out.append(Dense(cfg.ffn_hidden, d, rng))
        if cfg.air_on_predictor:
            self.predictor = RoutedDense(d, H, L, rng, groups=nt)
        else:
            self.predictor = Dense(d, H, rng, groups=nt)
        _zero_output(self.predictor)

    @property
    def n_feature_routes(self) -> int:
        return sum(isinstance(m, RoutedLatentAttention) for m in self.attn)


def itransformer_forward(net: ITransformerNet, X: Tensor, r_kd=None, r_ol=None) -> Tensor:
    r_kd = iter(_check_routing("feature", net.n_feature_routes, r_kd))
    r_ol = iter(_check_routing("predictor", int(isinstance(net.predictor, RoutedDense)), r_ol))
    tokens = net.embed(X)                                                  # (B, C, d)
    for attn, f_in, f_out in zip(net.attn, net.ffn_in, net.ffn_out):
        tokens = ops.add(tokens, _apply(attn, tokens, r_kd))
        tokens = ops.add(tokens, f_out(ops.relu(f_in(tokens))))
    sel = ops.getitem(tokens, (slice(None), net.targets))                  # (B, nt, d)
    return _apply(net.predictor, sel, r_ol)


# TimeMMD-style fusion

class TimeMMDFusion(Module):
    """MLP over ``[e_kd, e_ol]`` whose output is added to the unimodal forecast.
    The last layer starts at zero so training begins from the base model."""

    def __init__(self, dim: int, hidden: int, n_targets: int, horizon: int, rng: np.random.Generator):
        self.dim, self.n_targets, self.horizon = dim, n_targets, horizon
        self.hidden = Dense(2 * dim, hidden, rng)
        self.out = Dense(hidden, n_targets * horizon, rng)
        self.out.W.data[...] = 0.0


def timemmd_fuse(fusion: TimeMMDFusion, base_pred: Tensor, e_kd: Tensor, e_ol: Tensor) -> Tensor:
    for name, e in (("key_driver", e_kd), ("outlook", e_ol)):
        if e.shape[-1] != fusion.dim:
            raise DimensionError(f"{name} embedding has length {e.shape[-1]}, expected D={fusion.dim}")
    single = base_pred.ndim == 2
    if single:
        base_pred = ops.reshape(base_pred, (1,) + base_pred.shape)
        e_kd, e_ol = ops.reshape(e_kd, (1, -1)), ops.reshape(e_ol, (1, -1))
    z = ops.concat([e_kd, e_ol], axis=-1)
    proj = fusion.out(ops.relu(fusion.hidden(z)))
    out = ops.add(base_pred, ops.reshape(proj, (proj.shape[0], fusion.n_targets, fusion.horizon)))
    return ops.reshape(out, out.shape[1:]) if single else out


NETS = {"tsmixer": TSMixerNet, "tcn": TCNNet, "itransformer": ITransformerNet}
FORWARDS = {"tsmixer": tsmixer_forward, "tcn": tcn_forward, "itransformer": itransformer_forward}
