"""Finite-difference validation of reverse-mode gradients."""
from __future__ import annotations

from typing import Callable

import numpy as np

from .tensor import Tensor


def grad_check(f: Callable[[], Tensor], params: list[Tensor], eps: float = 1e-6,
               floor: float = 1e-4, max_entries: int | None = None,
               rng: np.random.Generator | None = None) -> float:
    """Max relative error between backprop and central differences.

    Per entry the error is ``|a - n| / max(|a|, |n|, floor)``; ``floor``
    keeps entries whose true gradient is ~0 from turning round-off into a
    huge ratio. With ``max_entries`` only a random subset of each
    parameter's entries is probed.
    """
    for p in params:
        p.grad = None
    out = f()
    if out.requires_grad:
        out.backward()
    analytic = [np.zeros_like(p.data) if p.grad is None else p.grad.copy() for p in params]

    worst = 0.0
    for p, a in zip(params, analytic):
        p.data = np.ascontiguousarray(p.data)
        flat = p.data.reshape(-1)  # view: writes go straight to the parameter
        idx = np.arange(flat.size)
        if max_entries is not None and flat.size > max_entries:
            idx = (rng or np.random.default_rng(0)).choice(flat.size, max_entries, replace=False)
        a_flat = a.reshape(-1)
        for i in idx:
            orig = flat[i]
            flat[i] = orig + eps
            f_plus = f().item()
            flat[i] = orig - eps
            f_minus = f().item()
            flat[i] = orig
            numeric = (f_plus - f_minus) / (2 * eps)
            denom = max(abs(a_flat[i]), abs(numeric), floor)
            worst = max(worst, abs(a_flat[i] - numeric) / denom)
    for p in params:
        p.grad = None
    return worst
