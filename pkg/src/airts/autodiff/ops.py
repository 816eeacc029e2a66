"""Differentiable operations over :class:`Tensor`.

Elementwise ops accept numpy-style broadcasting where a layer needs it
(bias rows, per-sample gates); gradients are summed back to each operand's
shape.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .tensor import ContractError, DimensionError, Tensor, as_tensor, make_result


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def _broadcast_shape(op: str, a: Tensor, b: Tensor) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise DimensionError(f"{op}: incompatible shapes {a.shape} and {b.shape}") from None


def add(a: Tensor, b: Tensor) -> Tensor:
    _broadcast_shape("add", a, b)
    sa, sb = a.shape, b.shape
    return make_result(
        "add", a.data + b.data, (a, b),
        lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)),
    )


def sub(a: Tensor, b: Tensor) -> Tensor:
    _broadcast_shape("sub", a, b)
    sa, sb = a.shape, b.shape
    return make_result(
        "sub", a.data - b.data, (a, b),
        lambda g: (_unbroadcast(g, sa), _unbroadcast(-g, sb)),
    )


def mul(a: Tensor, b: Tensor) -> Tensor:
    _broadcast_shape("mul", a, b)
    ad, bd = a.data, b.data
    return make_result(
        "mul", ad * bd, (a, b),
        lambda g: (_unbroadcast(g * bd, ad.shape), _unbroadcast(g * ad, bd.shape)),
    )


def scale(a: Tensor, c: float) -> Tensor:
    return make_result("scale", a.data * c, (a,), lambda g: (g * c,))


def square(a: Tensor) -> Tensor:
    ad = a.data
    return make_result("square", ad * ad, (a,), lambda g: (2.0 * g * ad,))


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0
    return make_result("relu", np.where(mask, a.data, 0.0), (a,), lambda g: (g * mask,))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product over the last two axes, batched over leading axes."""
    if a.ndim < 2 or b.ndim < 2:
        raise DimensionError(f"matmul needs matrices, got shapes {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul: inner extents differ for shapes {a.shape} and {b.shape}")
    try:
        np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    except ValueError:
        raise DimensionError(f"matmul: batch extents differ for shapes {a.shape} and {b.shape}") from None
    ad, bd = a.data, b.data

    def back(g):
        ga = g @ np.swapaxes(bd, -1, -2)
        gb = np.swapaxes(ad, -1, -2) @ g
        return _unbroadcast(ga, ad.shape), _unbroadcast(gb, bd.shape)

    return make_result("matmul", ad @ bd, (a, b), back)


def transpose(a: Tensor, axes: Sequence[int] | None = None) -> Tensor:
    """Permute axes; the default swaps the last two."""
    if axes is None:
        axes = list(range(a.ndim))
        axes[-2], axes[-1] = axes[-1], axes[-2]
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    return make_result("transpose", np.transpose(a.data, axes), (a,), lambda g: (np.transpose(g, inverse),))


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    src = a.shape
    try:
        out = a.data.reshape(tuple(shape))
    except ValueError:
        raise DimensionError(f"reshape: cannot view {src} as {tuple(shape)}") from None
    return make_result("reshape", out, (a,), lambda g: (g.reshape(src),))


def getitem(a: Tensor, index) -> Tensor:
    src_shape = a.shape

    def back(g):
        full = np.zeros(src_shape)
        np.add.at(full, index, g)
        return (full,)

    return make_result("getitem", a.data[index], (a,), back)


def take_rows(table: Tensor, idx: np.ndarray) -> Tensor:
    """Gather rows ``table[idx]`` with scatter-add gradient."""
    idx = np.asarray(idx, dtype=np.int64)
    n = table.shape[0]

    def back(g):
        full = np.zeros_like(table.data)
        np.add.at(full, idx, g)
        return (full,)

    out = table.data[idx]
    return make_result("take_rows", out, (table,), back)


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = tuple(tensors)
    if not tensors:
        raise ContractError("concat needs at least one tensor")
    ndim = tensors[0].ndim
    ax = axis % ndim
    for t in tensors[1:]:
        if t.ndim != ndim or any(
            t.shape[i] != tensors[0].shape[i] for i in range(ndim) if i != ax
        ):
            raise DimensionError(
                f"concat: shapes {[t.shape for t in tensors]} differ off axis {axis}"
            )
    sizes = np.cumsum([t.shape[ax] for t in tensors])[:-1]

    def back(g):
        return tuple(np.split(g, sizes, axis=ax))

    return make_result("concat", np.concatenate([t.data for t in tensors], axis=ax), tensors, back)


def concat_last_axis(tensors: Sequence[Tensor]) -> Tensor:
    return concat(tensors, axis=-1)


def sum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:  # noqa: A001
    src = a.shape

    def back(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, src).copy(),)

    return make_result("sum", np.asarray(a.data.sum(axis=axis, keepdims=keepdims)), (a,), back)


def mean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    n = a.data.size if axis is None else np.prod([a.shape[i] for i in np.atleast_1d(axis)])
    return scale(sum(a, axis=axis, keepdims=keepdims), 1.0 / float(n))


def softmax(a: Tensor) -> Tensor:
    """Softmax over the last axis with max subtraction."""
    if a.ndim == 0 or a.shape[-1] < 1:
        raise DimensionError(f"softmax needs a non-empty last axis, got shape {a.shape}")
    z = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=-1, keepdims=True)

    def back(g):
        return (y * (g - (g * y).sum(axis=-1, keepdims=True)),)

    return make_result("softmax", y, (a,), back)


softmax_last_axis = softmax


def mse_loss(pred: Tensor, target: Tensor) -> Tensor:
    if pred.shape != target.shape:
        raise DimensionError(f"mse_loss: shapes {pred.shape} and {target.shape} differ")
    diff = pred.data - target.data
    n = diff.size

    def back(g):
        gp = (2.0 / n) * g * diff
        return gp, -gp

    return make_result("mse_loss", np.asarray(np.mean(diff * diff)), (pred, target), back)


def stop_gradient(a: Tensor) -> Tensor:
    return Tensor(a.data.copy())


def straight_through(z: Tensor, q_value: np.ndarray) -> Tensor:
    """Forward returns ``q_value`` exactly; backward copies the gradient to ``z``."""
    q_value = np.asarray(q_value, dtype=np.float64)
    if q_value.shape != z.shape:
        raise DimensionError(f"straight_through: shapes {z.shape} and {q_value.shape} differ")
    return make_result("straight_through", q_value.copy(), (z,), lambda g: (g,))


def causal_dilated_conv1d(x: Tensor, kernels: Tensor, dilation: int = 1) -> Tensor:
    """Causal 1-D convolution.

    ``x`` is ``(..., C_in, T)`` and ``kernels`` is ``(C_out, C_in, k)``. The
    input is left-padded by ``(k - 1) * dilation`` zeros, so the output has
    length ``T`` and position ``t`` only sees inputs at ``<= t``. Kernel tap
    ``j`` multiplies ``x[t - (k - 1 - j) * dilation]``.
    """
    if int(dilation) != dilation or dilation < 1:
        raise ValueError(f"dilation must be a positive integer, got {dilation}")
    if kernels.ndim != 3 or x.ndim < 2:
        raise DimensionError(f"conv1d: bad ranks, x {x.shape}, kernels {kernels.shape}")
    c_out, c_in, k = kernels.shape
    if k < 1:
        raise ValueError("kernel size must be >= 1")
    if x.shape[-2] != c_in:
        raise DimensionError(f"conv1d: x has {x.shape[-2]} channels, kernels expect {c_in}")
    t_len = x.shape[-1]
    pad = (k - 1) * dilation
    lead = x.shape[:-2]
    xp = np.zeros(lead + (c_in, t_len + pad))
    xp[..., pad:] = x.data
    # cols[..., c, j, t] = xp[..., c, t + j * dilation]
    cols = np.stack([xp[..., j * dilation: j * dilation + t_len] for j in range(k)], axis=-2)
    w = kernels.data
    out = np.einsum("oij,...ijt->...ot", w, cols, optimize=True)

    def back(g):
        gw = np.einsum("...ot,...ijt->oij", g, cols, optimize=True)
        gcols = np.einsum("oij,...ot->...ijt", w, g, optimize=True)
        gxp = np.zeros_like(xp)
        for j in range(k):
            gxp[..., j * dilation: j * dilation + t_len] += gcols[..., j, :]
        return gxp[..., pad:], gw

    return make_result("conv1d", out, (x, kernels), back)
