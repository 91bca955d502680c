"""Gradient-descent inference over softmax-parameterized relaxed labelings."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ..corpus import LabelVocab, span_f1, token_accuracy
from ..crf.inference import path_energy
from ..crf.model import FrozenEnergy

INITS = ("gaussian", "zeros", "warm")
N_GRID = (5, 10, 20, 30, 40, 50, 100, 500, 1000)
LR_GRID = (1e4, 5e3, 1e3, 500.0, 100.0, 50.0, 10.0, 5.0, 1.0)


class GdDivergence(FloatingPointError):
    def __init__(self, step: int):
        super().__init__(f"relaxed energy became non-finite at step {step}")
        self.step = step


@dataclass
class GdConfig:
    iterations: int = 20
    lr: float = 1.0
    momentum: float = 0.9
    init: str = "gaussian"
    sigma: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.init not in INITS:
            raise ValueError(f"init must be one of {INITS}")
        if self.init == "gaussian" and self.sigma <= 0:
            raise ValueError("sigma must be > 0 for gaussian init")

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class GdResult:
    logits: np.ndarray  # final y in R^{n x L}
    labels: np.ndarray  # row argmax of the final logits
    energy: float  # discrete energy of ``labels``
    energies: list[float]  # relaxed energy after 0..N steps
    snapshots: dict[int, np.ndarray] = field(default_factory=dict)  # step -> labels

    @property
    def iterations(self) -> int:
        return len(self.energies) - 1

    @property
    def distributions(self) -> np.ndarray:
        return _softmax(self.logits)


def _softmax(y: np.ndarray) -> np.ndarray:
    z = np.exp(y - y.max(axis=1, keepdims=True))
    return z / z.sum(axis=1, keepdims=True)


def relaxed_energy_and_grad(y: np.ndarray, unary: np.ndarray, W: np.ndarray) -> tuple[float, np.ndarray]:
    """``E(softmax(y))`` and its gradient with respect to the logits ``y``."""
    p = _softmax(y)
    pair = p[:-1] @ W  # (n-1, L): sum_i p_{t-1,i} W[i, :]
    e = -(float(np.sum(p * unary)) + float(np.sum(pair * p[1:])))
    g = -unary.copy()  # dE/dp
    g[1:] -= pair
    g[:-1] -= p[1:] @ W.T
    grad = p * (g - np.sum(p * g, axis=1, keepdims=True))
    return e, grad


def initial_logits(shape: tuple[int, int], config: GdConfig, init: np.ndarray | None = None) -> np.ndarray:
    if config.init == "warm" or init is not None:
        if init is None:
            raise ValueError("warm init needs initial logits")
        init = np.array(init, dtype=np.float64)
        if init.shape != shape:
            raise ValueError(f"initial logits have shape {init.shape}, expected {shape}")
        return init
    if config.init == "zeros":
        return np.zeros(shape)
    return np.random.default_rng(config.seed).normal(0.0, config.sigma, size=shape)


def gd_minimize(unary, W, config: GdConfig, init: np.ndarray | None = None,
                record_steps: Iterable[int] = ()) -> GdResult:
    """Momentum gradient descent on ``y`` for ``E(softmax(y))``.

    Updates are ``v = mu v - lr grad; y = y + v``. Labels at the steps in
    ``record_steps`` are kept in ``snapshots``.
    """
    unary = np.asarray(unary, dtype=np.float64)
    W = np.asarray(W, dtype=np.float64)
    y = initial_logits(unary.shape, config, init)
    v = np.zeros_like(y)
    record = set(record_steps)
    snapshots = {}
    energies = []
    for step in range(config.iterations + 1):
        e, grad = relaxed_energy_and_grad(y, unary, W)
        if not np.isfinite(e) or not np.isfinite(grad).all():
            raise GdDivergence(step)
        energies.append(e)
        if step in record:
            snapshots[step] = np.argmax(y, axis=1)
        if step == config.iterations:
            break
        v = config.momentum * v - config.lr * grad
        y = y + v
        if not np.isfinite(y).all():
            raise GdDivergence(step + 1)
    labels = np.argmax(y, axis=1).astype(np.int64)
    return GdResult(y, labels, path_energy(unary, W, labels), energies, snapshots)


def gd_infer(tokens: Sequence[str], frozen: FrozenEnergy, config: GdConfig,
             init: np.ndarray | None = None) -> GdResult:
    """GD inference for one sentence; the unary table is computed once and cached."""
    return gd_minimize(frozen.unary(tokens), frozen.W, config, init)


def instance_metric(gold: np.ndarray, pred: np.ndarray, labels: LabelVocab, metric: str) -> float:
    if metric == "accuracy":
        return token_accuracy([gold], [pred], labels)
    if metric == "f1":
        return span_f1(labels.decode(gold), labels.decode(pred)).f1
    raise ValueError(f"unknown metric {metric!r}")


@dataclass
class TuneResult:
    iterations: int
    lr: float
    metric: float
    energy: float
    labels: np.ndarray


def gd_oracle_tune(tokens: Sequence[str], gold, frozen: FrozenEnergy,
                   n_grid: Sequence[int] = N_GRID, lr_grid: Sequence[float] = LR_GRID,
                   metric: str = "accuracy", base: GdConfig | None = None) -> TuneResult:
    """Per-instance grid search over ``(N, lr)`` using the gold labels.

    Picks the highest metric, then the lowest discrete energy, then the
    smallest N, then the earliest lr in ``lr_grid``. One run per lr to the
    largest N covers every smaller N, since the trajectory is a prefix.
    Diverging runs are skipped.
    """
    base = base or GdConfig()
    gold = np.asarray(gold, dtype=np.int64)
    unary, W = frozen.unary(tokens), frozen.W
    n_max = max(n_grid)
    best, best_key = None, None
    for lr_rank, lr in enumerate(lr_grid):
        cfg = GdConfig(n_max, lr, base.momentum, base.init, base.sigma, base.seed)
        try:
            run = gd_minimize(unary, W, cfg, record_steps=n_grid)
        except GdDivergence:
            continue
        for n in n_grid:
            pred = run.snapshots[n]
            e = path_energy(unary, W, pred)
            score = instance_metric(gold, pred, frozen.labels, metric)
            key = (-score, e, n, lr_rank)
            if best_key is None or key < best_key:
                best_key, best = key, TuneResult(n, lr, score, e, pred.astype(np.int64))
    if best is None:
        raise GdDivergence(0)
    return best
