from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .tensor import Tensor


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    lr: float = 1e-4
    scales: list[float] | None = None     # per-parameter learning-rate multipliers

    @classmethod
    def for_params(cls, params: Sequence[Tensor], lr: float = 1e-4, beta1: float = 0.9,
                   beta2: float = 0.999, eps: float = 1e-8) -> "AdamState":
        if lr <= 0:
            raise ValueError(f"learning rate must be positive, got {lr}")
        return cls(
            m=[np.zeros_like(p.data) for p in params],
            v=[np.zeros_like(p.data) for p in params],
            lr=lr, beta1=beta1, beta2=beta2, eps=eps,
        )


def adam_step(state: AdamState, params: Sequence[Tensor], grads: Sequence[np.ndarray | None]) -> None:
    """Bias-corrected Adam update, in place. ``None`` grads count as zero."""
    if state.lr <= 0:
        raise ValueError(f"learning rate must be positive, got {state.lr}")
    if len(params) != len(state.m):
        raise ValueError(f"optimizer tracks {len(state.m)} params, got {len(params)}")
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.step
    c2 = 1.0 - b2 ** state.step
    scales = state.scales or [1.0] * len(params)
    for p, g, m, v, k in zip(params, grads, state.m, state.v, scales):
        if m.shape != p.data.shape:
            raise ValueError(f"moment shape {m.shape} does not match parameter {p.data.shape}")
        m *= b1
        v *= b2
        if g is not None:
            m += (1.0 - b1) * g
            v += (1.0 - b2) * np.square(g)
        denom = np.sqrt(v / c2)
        denom += state.eps
        step = m / c1
        step /= denom
        step *= state.lr * k
        p.data -= step


@dataclass
class Adam:
    params: list[Tensor]
    lr: float = 1e-4
    lr_scales: list[float] | None = None
    state: AdamState = field(init=False)

    def __post_init__(self):
        self.state = AdamState.for_params(self.params, lr=self.lr)
        if self.lr_scales is not None:
            if len(self.lr_scales) != len(self.params):
                raise ValueError(f"{len(self.lr_scales)} lr scales for {len(self.params)} params")
            self.state.scales = [float(k) for k in self.lr_scales]

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    def step(self) -> None:
        adam_step(self.state, self.params, [p.grad for p in self.params])
