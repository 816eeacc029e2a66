"""Text-embedding -> latent routing weights.

A :class:`RoutingModule` owns a weight-generator MLP (shared trunk, one
output head per routed layer) and a codebook of logit vectors. Each head's
logits are snapped to their nearest codebook row with straight-through
gradients, then softmax-normalised into routing weights.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .autodiff import Module, Tensor, ops, xavier_uniform, zeros_param
from .autodiff.tensor import DimensionError, as_tensor
from .errors import ConfigurationError

COMMITMENT_WEIGHT = 0.25


class WeightGenerator(Module):
    """MLP ``D -> hidden -> hidden`` (ReLU) with one linear head ``hidden -> L`` per routed layer."""

    def __init__(self, dim: int, n_heads: int, latent: int, rng: np.random.Generator,
                 hidden: int = 256):
        self.dim, self.n_heads, self.latent, self.hidden = dim, n_heads, latent, hidden
        self.W_a = xavier_uniform(rng, (dim, hidden), dim, hidden)
        self.b_a = zeros_param((hidden,))
        self.W_b = xavier_uniform(rng, (hidden, hidden), hidden, hidden)
        self.b_b = zeros_param((hidden,))
        self.head_W = [xavier_uniform(rng, (hidden, latent), hidden, latent) for _ in range(n_heads)]
        self.head_b = [zeros_param((latent,)) for _ in range(n_heads)]


def generate_logits(g: WeightGenerator, e) -> list[Tensor]:
    """Per-head logits, each ``(L,)`` for a single embedding or ``(B, L)`` for a batch."""
    e = as_tensor(e)
    if e.shape[-1] != g.dim:
        raise DimensionError(f"embedding has length {e.shape[-1]}, generator expects D={g.dim}")
    single = e.ndim == 1
    x = ops.reshape(e, (1, g.dim)) if single else e
    h = ops.relu(ops.add(ops.matmul(x, g.W_a), g.b_a))
    h = ops.relu(ops.add(ops.matmul(h, g.W_b), g.b_b))
    out = [ops.add(ops.matmul(h, w), b) for w, b in zip(g.head_W, g.head_b)]
    if single:
        out = [ops.reshape(o, (g.latent,)) for o in out]
    return out


class Codebook(Module):
    def __init__(self, size: int, latent: int, rng: np.random.Generator, scale: float = 0.5):
        if size < 1:
            raise ConfigurationError("codebook needs at least one entry")
        self.entries = Tensor(rng.normal(0.0, scale, size=(size, latent)), requires_grad=True)

    @property
    def size(self) -> int:
        return self.entries.shape[0]


def nearest_codebook_entry(z, c: Codebook) -> tuple[np.ndarray, np.ndarray | int]:
    """Nearest row by squared Euclidean distance, lowest index on ties."""
    table = c.entries.data
    if table.shape[0] == 0:
        raise ConfigurationError("codebook is empty")
    zv = np.asarray(z.data if isinstance(z, Tensor) else z, dtype=np.float64)
    if zv.shape[-1] != table.shape[1]:
        raise DimensionError(f"vector length {zv.shape[-1]} != codebook entry length {table.shape[1]}")
    d2 = ((zv[..., None, :] - table) ** 2).sum(axis=-1)
    idx = np.argmin(d2, axis=-1)
    if zv.ndim == 1:
        return table[idx].copy(), int(idx)
    return table[idx].copy(), idx


def _sq_norm_mean(x: Tensor) -> Tensor:
    """Squared norm over the last axis, averaged over any leading batch axis."""
    s = ops.sum(ops.square(x), axis=-1)
    return ops.mean(s) if s.ndim else s


def straight_through_quantize(z: Tensor, c: Codebook, pin=None):
    """Snap ``z`` to its nearest codebook row.

    Returns ``(q, index, codebook_loss, commitment_loss)``. ``q`` equals the
    chosen row exactly and passes its gradient to ``z`` unchanged. The codebook
    loss ``|sg(z) - e|^2`` trains the row; the commitment loss ``|z - sg(e)|^2``
    trains the generator.

    ``pin=(index, z0, e0)`` swaps in the smooth surrogate
    ``q = z + (e0 - z0)`` whose true gradient equals the straight-through one;
    finite differences are taken on it.
    """
    if pin is None:
        entry, idx = nearest_codebook_entry(z, c)
        q = ops.straight_through(z, entry)
        e_const = Tensor(entry)
        z_const = ops.stop_gradient(z)
    else:
        idx, z0, e0 = pin
        q = ops.add(z, Tensor(e0 - z0))
        e_const = Tensor(e0)
        z_const = Tensor(z0)
    e_live = ops.take_rows(c.entries, np.asarray(idx))
    codebook_loss = _sq_norm_mean(ops.sub(z_const, e_live))
    commitment_loss = _sq_norm_mean(ops.sub(z, e_const))
    return q, idx, codebook_loss, commitment_loss


@dataclass
class RoutingOutput:
    weights: list[Tensor]
    indices: list = field(default_factory=list)
    codebook_loss: Tensor = field(default_factory=lambda: Tensor(0.0))
    commitment_loss: Tensor = field(default_factory=lambda: Tensor(0.0))
    pre_softmax: list[np.ndarray] = field(default_factory=list)

    @property
    def aux_loss(self) -> Tensor:
        return ops.add(self.codebook_loss, ops.scale(self.commitment_loss, COMMITMENT_WEIGHT))


def route_weights(g: WeightGenerator, c: Codebook | None, e, vq_enabled: bool,
                  rescale: bool = False, pins: dict | None = None) -> RoutingOutput:
    """Embedding -> per-head softmax routing weights (+ VQ losses when enabled)."""
    logits = generate_logits(g, e)
    weights, indices, pre = [], [], []
    cb_total: Tensor = Tensor(0.0)
    cm_total: Tensor = Tensor(0.0)
    for h, z in enumerate(logits):
        if vq_enabled:
            if c is None:
                raise ConfigurationError("VQ enabled but no codebook supplied")
            pin = pins.get(h) if pins is not None else None
            q, idx, cb, cm = straight_through_quantize(z, c, pin=pin)
            if pins is not None and h not in pins:
                pins[h] = (idx, z.data.copy(), q.data.copy())
            cb_total = ops.add(cb_total, cb)
            cm_total = ops.add(cm_total, cm)
            indices.append(idx)
            z = q
        pre.append(z.data)
        r = ops.softmax(z)
        if rescale:
            r = ops.scale(r, float(g.latent))
        weights.append(r)
    return RoutingOutput(weights, indices, cb_total, cm_total, pre)


class RoutingModule(Module):
    """One text stream's generator + codebook."""

    def __init__(self, dim: int, n_heads: int, latent: int, rng: np.random.Generator,
                 hidden: int = 256, codebook_size: int = 16, vq_enabled: bool = True,
                 rescale: bool = False, codebook_scale: float = 0.5):
        self.generator = WeightGenerator(dim, n_heads, latent, rng, hidden=hidden)
        self.codebook = Codebook(codebook_size, latent, rng, scale=codebook_scale) if vq_enabled else None
        self.vq_enabled = vq_enabled
        self.rescale = rescale
        self._pins: dict | None = None

    def __call__(self, e) -> RoutingOutput:
        return route_weights(self.generator, self.codebook, e, self.vq_enabled,
                             rescale=self.rescale, pins=self._pins)

    @contextmanager
    def pinned_quantization(self) -> Iterator[None]:
        """Freeze codebook assignments from the first call inside the block;
        later calls evaluate the straight-through surrogate."""
        self._pins = {}
        try:
            yield
        finally:
            self._pins = None
