"""Dense, causal-convolution and attention layers, plain and routed.

A routed layer is a layer factored through an explicit latent of width L.
The routing vector ``r`` multiplies that latent, so each latent unit acts as
one gateable input-to-output pathway.

Batched inputs carry the batch on axis 0 and ``r`` is then ``(B, L)``;
unbatched inputs take ``r`` of shape ``(L,)``.
"""

from __future__ import annotations

import numpy as np

from .autodiff import Module, Tensor, ops, xavier_uniform, zeros_param
from .autodiff.tensor import DimensionError, as_tensor


def _gate(h: Tensor, r: Tensor, latent_axis: int = -1) -> Tensor:
    """Multiply ``h`` by ``r`` along ``latent_axis``, broadcasting per sample."""
    L = h.shape[latent_axis]
    if r.shape[-1] != L:
        raise DimensionError(f"routing has {r.shape[-1]} weights, latent has {L}")
    if r.ndim == 1:
        shape = [1] * h.ndim
        shape[latent_axis] = L
        return ops.mul(h, ops.reshape(r, shape))
    if r.ndim != 2 or r.shape[0] != h.shape[0]:
        raise DimensionError(f"routing shape {r.shape} does not match batch of {h.shape}")
    shape = [1] * h.ndim
    shape[0] = r.shape[0]
    shape[latent_axis] = L
    return ops.mul(h, ops.reshape(r, shape))


def _grouped_affine(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """``x`` (..., G, in) times per-group ``w`` (G, out, in) plus ``b`` (G, out)."""
    g, out, inp = w.shape
    if x.shape[-2:] != (g, inp):
        raise DimensionError(f"grouped affine: input {x.shape} does not end with {(g, inp)}")
    lead = x.shape[:-2]
    x4 = ops.reshape(x, lead + (g, 1, inp))
    y = ops.matmul(x4, ops.transpose(w))
    return ops.add(ops.reshape(y, lead + (g, out)), b)


class Dense(Module):
    """Affine map on the last axis. With ``groups`` each group has its own weights."""

    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator, groups: int | None = None):
        self.n_in, self.n_out, self.groups = n_in, n_out, groups
        if groups is None:
            self.W = xavier_uniform(rng, (n_out, n_in), n_in, n_out)
            self.b = zeros_param((n_out,))
        else:
            self.W = xavier_uniform(rng, (groups, n_out, n_in), n_in, n_out)
            self.b = zeros_param((groups, n_out))

    def __call__(self, x: Tensor) -> Tensor:
        if self.groups is not None:
            return _grouped_affine(x, self.W, self.b)
        if x.shape[-1] != self.n_in:
            raise DimensionError(f"Dense expects last axis {self.n_in}, got shape {x.shape}")
        return ops.add(_affine(x, self.W), self.b)


def _affine(x: Tensor, w: Tensor) -> Tensor:
    if x.ndim == 1:
        return ops.reshape(ops.matmul(ops.reshape(x, (1, -1)), ops.transpose(w)), (w.shape[0],))
    return ops.matmul(x, ops.transpose(w))


class RoutedDense(Module):
    """``y = W2 (r * (W1 x + b1)) + b2``: an FC layer factored through L latent units."""

    def __init__(self, n_in: int, n_out: int, latent: int, rng: np.random.Generator,
                 groups: int | None = None):
        self.n_in, self.n_out, self.latent, self.groups = n_in, n_out, latent, groups
        lead = () if groups is None else (groups,)
        self.W1 = xavier_uniform(rng, lead + (latent, n_in), n_in, latent)
        self.b1 = zeros_param(lead + (latent,))
        self.W2 = xavier_uniform(rng, lead + (n_out, latent), latent, n_out)
        self.b2 = zeros_param(lead + (n_out,))

    def latent_values(self, x: Tensor) -> Tensor:
        if self.groups is not None:
            return _grouped_affine(x, self.W1, self.b1)
        if x.shape[-1] != self.n_in:
            raise DimensionError(f"RoutedDense expects last axis {self.n_in}, got shape {x.shape}")
        return ops.add(_affine(x, self.W1), self.b1)

    def __call__(self, x: Tensor, r: Tensor) -> Tensor:
        r = as_tensor(r)
        if r.shape[-1] != self.latent:
            raise DimensionError(f"routing has {r.shape[-1]} weights, layer latent is {self.latent}")
        h = _gate(self.latent_values(x), r)
        if self.groups is not None:
            return _grouped_affine(h, self.W2, self.b2)
        return ops.add(_affine(h, self.W2), self.b2)


def routed_dense_forward(layer: RoutedDense, x, r) -> Tensor:
    x, r = as_tensor(x), as_tensor(r)
    if x.ndim != 1 or x.shape[0] != layer.n_in:
        raise DimensionError(f"expected input vector of length {layer.n_in}, got shape {x.shape}")
    if r.ndim != 1 or r.shape[0] != layer.latent:
        raise DimensionError(f"expected routing vector of length {layer.latent}, got shape {r.shape}")
    return layer(x, r)


def collapse_to_dense(layer: RoutedDense, r) -> tuple[np.ndarray, np.ndarray]:
    """Equivalent single affine map ``(W2 diag(r) W1, W2 (r * b1) + b2)``."""
    r = np.asarray(r.data if isinstance(r, Tensor) else r, dtype=np.float64)
    w1, b1, w2, b2 = (p.data for p in (layer.W1, layer.b1, layer.W2, layer.b2))
    matrix = w2 @ (r[:, None] * w1)
    bias = w2 @ (r * b1) + b2
    return matrix, bias


class CausalConv1d(Module):
    def __init__(self, c_in: int, c_out: int, kernel: int, dilation: int, rng: np.random.Generator):
        self.dilation = dilation
        self.K = xavier_uniform(rng, (c_out, c_in, kernel), c_in * kernel, c_out * kernel)
        self.b = zeros_param((c_out,))

    def __call__(self, x: Tensor) -> Tensor:
        y = ops.causal_dilated_conv1d(x, self.K, self.dilation)
        return ops.add(y, ops.reshape(self.b, (-1, 1)))


class RoutedConv1d(Module):
    """Causal conv ``C_in -> L`` (original kernel/dilation), gate, then 1x1 conv ``L -> C_out``."""

    def __init__(self, c_in: int, c_out: int, latent: int, kernel: int, dilation: int,
                 rng: np.random.Generator):
        self.c_in, self.c_out, self.latent = c_in, c_out, latent
        self.kernel, self.dilation = kernel, dilation
        self.K_in = xavier_uniform(rng, (latent, c_in, kernel), c_in * kernel, latent * kernel)
        self.b_in = zeros_param((latent,))
        self.W_out = xavier_uniform(rng, (c_out, latent), latent, c_out)
        self.b_out = zeros_param((c_out,))

    def __call__(self, x: Tensor, r: Tensor) -> Tensor:
        r = as_tensor(r)
        h = ops.causal_dilated_conv1d(x, self.K_in, self.dilation)
        h = ops.add(h, ops.reshape(self.b_in, (-1, 1)))
        h = _gate(h, r, latent_axis=-2)
        y = ops.matmul(self.W_out, h)
        return ops.add(y, ops.reshape(self.b_out, (-1, 1)))


def routed_conv_forward(layer: RoutedConv1d, x, r) -> Tensor:
    x, r = as_tensor(x), as_tensor(r)
    if x.ndim != 2 or x.shape[0] != layer.c_in:
        raise DimensionError(f"expected input of shape ({layer.c_in}, T), got {x.shape}")
    if r.shape != (layer.latent,):
        raise DimensionError(f"expected routing vector of length {layer.latent}, got shape {r.shape}")
    return layer(x, r)


def _split_heads(x: Tensor, heads: int) -> Tensor:
    # (B, N, d) -> (B, h, N, d/h)
    b, n, d = x.shape
    return ops.transpose(ops.reshape(x, (b, n, heads, d // heads)), (0, 2, 1, 3))


def _merge_heads(x: Tensor) -> Tensor:
    b, h, n, dh = x.shape
    return ops.reshape(ops.transpose(x, (0, 2, 1, 3)), (b, n, h * dh))


class SelfAttention(Module):
    """Plain scaled dot-product self-attention over tokens."""

    def __init__(self, d_in: int, d: int, d_out: int, rng: np.random.Generator, heads: int = 1):
        if d % heads:
            raise ValueError(f"d={d} not divisible by heads={heads}")
        self.heads = heads
        self.Wq = xavier_uniform(rng, (d_in, d), d_in, d)
        self.Wk = xavier_uniform(rng, (d_in, d), d_in, d)
        self.Wv = xavier_uniform(rng, (d_in, d), d_in, d)
        self.Wo = xavier_uniform(rng, (d, d_out), d, d_out)

    def __call__(self, x: Tensor) -> Tensor:
        h = self.heads
        q = _split_heads(ops.matmul(x, self.Wq), h)
        k = _split_heads(ops.matmul(x, self.Wk), h)
        v = _split_heads(ops.matmul(x, self.Wv), h)
        dh = q.shape[-1]
        a = ops.softmax(ops.scale(ops.matmul(q, ops.transpose(k)), 1.0 / np.sqrt(dh)))
        return ops.matmul(_merge_heads(ops.matmul(a, v)), self.Wo)


class RoutedLatentAttention(Module):
    """Attention split through L learnable latents.

    The latents ``Z`` act as queries against the keys (map ``A1``, L x N),
    the routing vector gates the resulting latent summaries, and the latents
    then act as keys for the real queries (map ``A2``, N x L).
    """

    def __init__(self, d_in: int, d: int, d_out: int, latent: int, rng: np.random.Generator,
                 heads: int = 1):
        if d % heads:
            raise ValueError(f"d={d} not divisible by heads={heads}")
        self.heads, self.latent, self.d = heads, latent, d
        self.Z = Tensor(rng.normal(0.0, 1.0 / np.sqrt(d), size=(latent, d)), requires_grad=True)
        self.Wq = xavier_uniform(rng, (d_in, d), d_in, d)
        self.Wk = xavier_uniform(rng, (d_in, d), d_in, d)
        self.Wv = xavier_uniform(rng, (d_in, d), d_in, d)
        self.Wo = xavier_uniform(rng, (d, d_out), d, d_out)

    def _maps(self, x: Tensor):
        h = self.heads
        q = _split_heads(ops.matmul(x, self.Wq), h)
        k = _split_heads(ops.matmul(x, self.Wk), h)
        v = _split_heads(ops.matmul(x, self.Wv), h)
        dh = q.shape[-1]
        # (L, d) -> (h, L, dh)
        z = ops.transpose(ops.reshape(self.Z, (self.latent, h, dh)), (1, 0, 2))
        inv = 1.0 / np.sqrt(dh)
        a1 = ops.softmax(ops.scale(ops.matmul(z, ops.transpose(k)), inv))   # (B, h, L, N)
        a2 = ops.softmax(ops.scale(ops.matmul(q, ops.transpose(z)), inv))   # (B, h, N, L)
        return a1, a2, v

    def attention_maps(self, x) -> tuple[np.ndarray, np.ndarray]:
        """``(A1, A2)`` as arrays, shapes ``(B, heads, L, N)`` and ``(B, heads, N, L)``."""
        x = as_tensor(x)
        a1, a2, _ = self._maps(x if x.ndim == 3 else ops.reshape(x, (1,) + x.shape))
        return a1.data, a2.data

    def __call__(self, x: Tensor, r: Tensor) -> Tensor:
        r = as_tensor(r)
        if r.shape[-1] != self.latent:
            raise DimensionError(f"routing has {r.shape[-1]} weights, layer has {self.latent} latents")
        a1, a2, v = self._maps(x)
        summaries = _gate(ops.matmul(a1, v), r, latent_axis=-2)            # (B, h, L, dh)
        return ops.matmul(_merge_heads(ops.matmul(a2, summaries)), self.Wo)


def routed_latent_attention_forward(layer: RoutedLatentAttention, X, r) -> Tensor:
    X, r = as_tensor(X), as_tensor(r)
    if X.ndim != 2 or X.shape[0] < 1:
        raise DimensionError(f"expected token matrix (N, d_in) with N >= 1, got shape {X.shape}")
    if r.shape != (layer.latent,):
        raise DimensionError(f"expected routing vector of length {layer.latent}, got shape {r.shape}")
    y = layer(ops.reshape(X, (1,) + X.shape), r)
    return ops.reshape(y, y.shape[1:])
