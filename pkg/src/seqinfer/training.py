"""Epoch loop with momentum SGD and dev-set early stopping."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .numgrad import SGD, Module, NonFiniteError, Tensor, no_grad

log = logging.getLogger(__name__)


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class OptimConfig:
    lr: float = 0.05
    momentum: float = 0.9
    epochs: int = 10
    batch_size: int = 1
    patience: int = 3
    clip_norm: float | None = 5.0
    seed: int = 0


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    dev_metric: float
    weight: float | None = None


@dataclass
class TrainLog:
    initial_loss: float
    epochs: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    best_dev_metric: float = float("-inf")

    def to_json(self) -> dict:
        return asdict(self)


def fit(model: Module, n_examples: int, loss_fn: Callable[[int, int, np.random.Generator, bool], Tensor],
        dev_metric: Callable[[], float], cfg: OptimConfig,
        weight_schedule: Callable[[int], float] | None = None) -> TrainLog:
    """Train ``model`` in place and leave it at its best-dev-metric state.

    ``loss_fn(i, epoch, rng, train)`` returns the scalar loss of example
    ``i``. Epochs shuffle the example order with a generator seeded from
    ``cfg.seed``. Epoch records are 1-based; the best state may be the
    initial one (``best_epoch == 0``).
    """
    if n_examples == 0:
        raise ValueError("empty training corpus")
    rng = np.random.default_rng(cfg.seed)
    params = model.trainable_parameters()
    opt = SGD(params, cfg.lr, cfg.momentum, cfg.clip_norm)

    with no_grad():
        initial = float(np.mean([loss_fn(i, 0, rng, False).item() for i in range(n_examples)]))
    history = TrainLog(initial_loss=initial)
    best_state = model.state_dict()
    history.best_dev_metric = dev_metric()
    stale = 0
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n_examples)
        total = 0.0
        for start in range(0, n_examples, cfg.batch_size):
            batch = order[start: start + cfg.batch_size]
            opt.zero_grad()
            try:
                losses = [loss_fn(int(i), epoch, rng, True) for i in batch]
                loss = losses[0]
                for extra in losses[1:]:
                    loss = loss + extra
                total += loss.item()
                loss.backward()
                opt.step()
            except NonFiniteError as exc:
                raise TrainingDiverged(
                    f"non-finite value at epoch {epoch}, example offset {start}: {exc}"
                ) from exc
        metric = dev_metric()
        weight = weight_schedule(epoch - 1) if weight_schedule else None
        history.epochs.append(EpochRecord(epoch, total / n_examples, metric, weight))
        log.info("epoch %d loss %.4f dev %.3f", epoch, total / n_examples, metric)
        if metric > history.best_dev_metric:
            history.best_dev_metric = metric
            history.best_epoch = epoch
            best_state = model.state_dict()
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break
    model.load_state_dict(best_state)
    for p in model.parameters():
        p.grad = None
    return history


def check_nonempty(dev: Sequence, what: str = "dev set") -> None:
    if len(dev) == 0:
        raise ValueError(f"empty {what}")
