from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import Tensor, backward, current_tape, no_grad


def finite_difference_gradcheck(
    f: Callable[[], Tensor],
    params: Sequence[Tensor],
    eps: float = 1e-5,
    reference: Callable[[], Tensor] | None = None,
) -> float:
    """Max over coordinates of |analytic - central| / max(1, |central|).

    ``f`` builds a scalar loss from ``params`` and is differentiated by the
    tape. Central differences are taken on ``reference`` when given (a
    function whose true gradient should equal the analytic one, e.g. a
    straight-through surrogate), else on ``f`` itself.
    """
    numeric_fn = reference or f
    current_tape().clear()
    for p in params:
        p.grad = None
    loss = f()
    backward(loss)
    analytic = [np.zeros_like(p.data) if p.grad is None else p.grad.copy() for p in params]

    worst = 0.0
    with no_grad():
        for p, a in zip(params, analytic):
            flat = p.data.reshape(-1)
            ga = a.reshape(-1)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + eps
                fp = numeric_fn().item()
                flat[i] = orig - eps
                fm = numeric_fn().item()
                flat[i] = orig
                num = (fp - fm) / (2.0 * eps)
                worst = max(worst, abs(ga[i] - num) / max(1.0, abs(num)))
    return worst
