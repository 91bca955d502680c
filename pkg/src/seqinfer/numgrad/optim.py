"""SGD with momentum."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import NonFiniteError, ShapeError, Tensor

DEFAULT_MOMENTUM = 0.9


@dataclass
class OptimizerState:
    lr: float
    momentum: float = DEFAULT_MOMENTUM
    velocity: list[np.ndarray] = field(default_factory=list)


def sgd_momentum_step(params: list[Tensor], grads: list[np.ndarray | None],
                      state: OptimizerState) -> list[Tensor]:
    """In-place update ``v <- mu*v - lr*g ; p <- p + v``. Returns ``params``."""
    if len(params) != len(grads):
        raise ShapeError("params and grads differ in length")
    if not state.velocity:
        state.velocity = [np.zeros_like(p.data) for p in params]
    for k, (p, g, v) in enumerate(zip(params, grads, state.velocity)):
        if g is None:
            continue
        if g.shape != p.shape or v.shape != p.shape:
            raise ShapeError(f"param {k}: shape {p.shape}, grad {g.shape}, velocity {v.shape}")
        if not np.isfinite(g).all():
            raise NonFiniteError(f"non-finite gradient for param {k}")
        v *= state.momentum
        v -= state.lr * g
        p.data = p.data + v
        if not np.isfinite(p.data).all():
            raise NonFiniteError(f"non-finite value in param {k} after update")
    return params


class SGD:
    """Momentum SGD over a fixed parameter list, with optional global-norm clipping."""

    def __init__(self, params: list[Tensor], lr: float, momentum: float = DEFAULT_MOMENTUM,
                 clip_norm: float | None = None):
        self.params = list(params)
        self.state = OptimizerState(lr=lr, momentum=momentum,
                                    velocity=[np.zeros_like(p.data) for p in self.params])
        self.clip_norm = clip_norm

    @property
    def lr(self) -> float:
        return self.state.lr

    @lr.setter
    def lr(self, value: float) -> None:
        self.state.lr = value

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    def step(self) -> float:
        """Apply one update from the accumulated ``.grad``; returns the pre-clip grad norm."""
        grads = [p.grad for p in self.params]
        sq = sum(float((g * g).sum()) for g in grads if g is not None)
        norm = float(np.sqrt(sq))
        if not np.isfinite(norm):
            raise NonFiniteError("non-finite gradient norm")
        if self.clip_norm is not None and norm > self.clip_norm:
            scale = self.clip_norm / norm
            grads = [None if g is None else g * scale for g in grads]
        sgd_momentum_step(self.params, grads, self.state)
        return norm
