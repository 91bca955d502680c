"""Test-time refinements that start from a trained inference network."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..corpus import Corpus
from ..crf.inference import path_energy, relaxed_energy
from ..crf.model import FrozenEnergy, evaluate_labels
from ..infnet import InfNet, discretize
from ..numgrad import SGD, NonFiniteError, softmax
from .gd import GdConfig, GdResult, gd_minimize

log = logging.getLogger(__name__)


@dataclass
class RefineConfig:
    epochs: int = 10
    lr: float = 0.01
    momentum: float = 0.9
    keep_best: bool = True
    clip_norm: float | None = None

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class RefineResult:
    labels: np.ndarray
    energy: float
    best_epoch: int
    energies: list[float] = field(default_factory=list)  # discrete energy after 0..N updates
    diverged: bool = False


def instance_tailor(tokens: Sequence[str], infnet: InfNet, frozen: FrozenEnergy,
                    config: RefineConfig) -> RefineResult:
    """Fine-tune a private copy of the network on ``E(x, A(x))`` for one sentence.

    Epoch 0 is the unrefined output. With ``keep_best`` the lowest-energy
    discretized output over epochs 0..N is returned (earliest on ties),
    otherwise the output after the last update. A non-finite value aborts
    the refinement and falls back to the epoch-0 output with ``diverged``
    set. ``infnet`` itself is never modified.
    """
    net = infnet.clone()
    unary, W = frozen.unary(tokens), frozen.W
    opt = SGD(net.trainable_parameters(), config.lr, config.momentum, config.clip_norm)
    outputs, energies = [], []
    try:
        for epoch in range(config.epochs + 1):
            logits = net.forward(tokens)
            labels = discretize(logits)
            outputs.append(labels)
            energies.append(path_energy(unary, W, labels))
            if epoch == config.epochs:
                break
            opt.zero_grad()
            relaxed_energy(unary, W, softmax(logits, axis=1)).backward()
            opt.step()
    except NonFiniteError as exc:
        log.warning("instance tailoring diverged at epoch %d: %s", len(outputs), exc)
        if not outputs:
            raise
        return RefineResult(outputs[0], energies[0], 0, energies, diverged=True)
    best = int(np.argmin(energies)) if config.keep_best else len(energies) - 1
    return RefineResult(outputs[best], energies[best], best, energies)


def warm_start_gd(tokens: Sequence[str], infnet: InfNet, frozen: FrozenEnergy,
                  config: GdConfig) -> GdResult:
    """GD inference initialized at the network's logits (pre-softmax scores)."""
    init = infnet.logits(tokens)
    cfg = GdConfig(config.iterations, config.lr, config.momentum, "warm", config.sigma, config.seed)
    return gd_minimize(frozen.unary(tokens), frozen.W, cfg, init=init)


def tune_on_dev(dev: Corpus, frozen: FrozenEnergy, run: Callable[[Sequence[str], float], np.ndarray],
                lr_grid: Sequence[float], metric: str = "accuracy") -> tuple[float, dict[float, tuple[float, float]]]:
    """Pick the learning rate with the best dev metric (ties: lower mean energy, then grid order).

    ``run(tokens, lr)`` returns a discrete labeling. Returns the chosen lr and
    ``{lr: (metric, mean energy)}`` for every lr that finished.
    """
    gold = [frozen.labels.encode(ex.labels) for ex in dev]
    table = {}
    best_key, best_lr = None, None
    for rank, lr in enumerate(lr_grid):
        try:
            pred = [run(ex.tokens, lr) for ex in dev]
        except (FloatingPointError, NonFiniteError):
            continue
        score = evaluate_labels(gold, pred, frozen.labels, metric)
        mean_e = float(np.mean([path_energy(frozen.unary(ex.tokens), frozen.W, p) for ex, p in zip(dev, pred)]))
        table[lr] = (score, mean_e)
        key = (-score, mean_e, rank)
        if best_key is None or key < best_key:
            best_key, best_lr = key, lr
    if best_lr is None:
        raise FloatingPointError("every learning rate diverged")
    return best_lr, table
