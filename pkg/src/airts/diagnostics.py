"""Finite-difference gradient suite over the routed layers, routing and full models."""

from __future__ import annotations

from contextlib import ExitStack
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .autodiff import Tensor, finite_difference_gradcheck, ops
from .data.windows import Batch
from .forecasters import ARCHITECTURES, ForecastModel, TimeMMDFusion, config_for_model_id, forward_batch, timemmd_fuse
from .layers import RoutedConv1d, RoutedDense, RoutedLatentAttention
from .routing import RoutingModule

TOLERANCE = 1e-4
EPS = 1e-5

# small enough that central differences over every parameter stay quick
TINY_MODEL = dict(lookback=4, horizon=2, latent=2, blocks=1, d_model=4, heads=1, ffn_hidden=4, embedding_dim=3,
                  generator_hidden=4, codebook_size=3, fusion_hidden=4, dilations=(1, 2), description_proj=2)
FULL_MODEL_VARIANTS = ("vanilla", "air", "air-fp", "timemmd")


@dataclass(frozen=True)
class CheckResult:
    name: str
    error: float

    @property
    def passed(self) -> bool:
        return self.error < TOLERANCE


def _randomize(module, rng, scale):
    for p in module.parameters():
        p.data = rng.normal(scale=scale, size=p.shape)


def _layer_check(layer, x_shape, out_shape, latent, rng) -> float:
    _randomize(layer, rng, 0.7)
    x = Tensor(rng.normal(size=x_shape))
    r = Tensor(rng.dirichlet(np.ones(latent)), requires_grad=True)
    t = Tensor(rng.normal(size=out_shape))
    return finite_difference_gradcheck(lambda: ops.mse_loss(layer(x, r), t), layer.parameters() + [r], eps=EPS)


def check_routed_dense(rng) -> float:
    return _layer_check(RoutedDense(4, 3, 5, rng), (6, 4), (6, 3), 5, rng)


def check_routed_conv(rng) -> float:
    return _layer_check(RoutedConv1d(2, 3, 4, 3, 2, rng), (2, 2, 7), (2, 3, 7), 4, rng)


def check_routed_attention(rng) -> float:
    return _layer_check(RoutedLatentAttention(3, 4, 2, 3, rng, heads=2), (2, 4, 3), (2, 4, 2), 3, rng)


def check_routing(rng) -> float:
    """Generator + codebook + softmax, through the straight-through quantiser."""
    m = RoutingModule(6, 2, 5, rng, hidden=4, codebook_size=4)
    for p in m.parameters():
        p.data = p.data + rng.normal(scale=0.2, size=p.shape)
    e = Tensor(rng.normal(size=(3, 6)))
    t = Tensor(rng.dirichlet(np.ones(5), size=3))

    def loss():
        out = m(e)
        return ops.add(ops.add(*[ops.mse_loss(r, t) for r in out.weights]), out.aux_loss)

    with m.pinned_quantization():
        return finite_difference_gradcheck(loss, m.parameters(), eps=EPS)


def check_timemmd(rng) -> float:
    fusion = TimeMMDFusion(3, 5, 2, 2, rng)
    _randomize(fusion, rng, 0.5)
    base = Tensor(rng.normal(size=(2, 2, 2)), requires_grad=True)
    kd, ol, y = rng.normal(size=(2, 3)), rng.normal(size=(2, 3)), rng.normal(size=(2, 2, 2))
    f = lambda: ops.mse_loss(timemmd_fuse(fusion, base, Tensor(kd), Tensor(ol)), Tensor(y))  # noqa: E731
    return finite_difference_gradcheck(f, fusion.parameters() + [base], eps=EPS)


def check_full_model(model_id: str, rng) -> float:
    desc = 2 if model_id.startswith("air") else None
    cfg = config_for_model_id(model_id, 3, [0, 2], description_dim=desc, **TINY_MODEL)
    model = ForecastModel(cfg, seed=int(rng.integers(1 << 30)))
    _randomize(model, rng, 0.5)
    b = 2
    batch = Batch(
        x=rng.normal(size=(b, cfg.channels, cfg.lookback)),
        y=rng.normal(size=(b, cfg.n_targets, cfg.horizon)),
        key_driver=rng.normal(size=(b, cfg.embedding_dim)),
        outlook=rng.normal(size=(b, cfg.embedding_dim)),
        descriptions=None if desc is None else np.broadcast_to(
            rng.normal(size=(cfg.channels, desc)), (b, cfg.channels, desc)).copy(),
        origins=[None] * b,
    )

    def loss():
        res = forward_batch(model, batch)
        return ops.add(ops.mse_loss(res.prediction, Tensor(batch.y)), res.aux_loss)

    with ExitStack() as stack:
        for router in model.routers():
            stack.enter_context(router.pinned_quantization())
        return finite_difference_gradcheck(loss, model.parameters(), eps=EPS)


def suite() -> list[tuple[str, Callable[[np.random.Generator], float]]]:
    checks: list[tuple[str, Callable]] = [
        ("RoutedDense", check_routed_dense),
        ("RoutedConv1d", check_routed_conv),
        ("RoutedLatentAttention", check_routed_attention),
        ("RoutingModule", check_routing),
        ("TimeMMDFusion", check_timemmd),
    ]
    for arch in ARCHITECTURES:
        for variant in FULL_MODEL_VARIANTS:
            mid = f"{variant}-{arch}"
            checks.append((f"model:{mid}", lambda rng, mid=mid: check_full_model(mid, rng)))
    return checks


def run_gradcheck_suite(seed: int = 0) -> list[CheckResult]:
    """Each check draws its instance from its own stream derived from ``seed``."""
    out = []
    for k, (name, fn) in enumerate(suite()):
        out.append(CheckResult(name, float(fn(np.random.default_rng([seed, k])))))
    return out
