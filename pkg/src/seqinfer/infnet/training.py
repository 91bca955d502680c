"""Energy-plus-local-loss training of inference networks, and the local baseline."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..corpus import Corpus, EmbeddingTable, LabelVocab
from ..crf.inference import relaxed_energy
from ..crf.model import FrozenEnergy, evaluate_labels
from ..numgrad import Tensor
from ..training import OptimConfig, TrainLog, check_nonempty, fit
from .model import InfNet, InfNetConfig, build_infnet, infnet_forward, table_of, token_loss

ANNEAL_RATE = 0.01
LAMBDA_GRID = (0.2, 0.5, 1.0, 2.0, 5.0)  # values worth sweeping for the local-loss weight


def anneal_weight(epoch: int) -> float:
    """Local-loss weight ``exp(-0.01 t)`` for 0-based epoch ``t``."""
    return math.exp(-ANNEAL_RATE * epoch)


@dataclass
class InfNetTrainConfig:
    model: InfNetConfig = field(default_factory=InfNetConfig)
    lam: float = 1.0
    anneal: bool = False
    energy_weight: float = 1.0
    optim: OptimConfig = field(default_factory=OptimConfig)
    metric: str = "accuracy"

    def __post_init__(self):
        if isinstance(self.model, dict):
            self.model = InfNetConfig(**self.model)
        if isinstance(self.optim, dict):
            self.optim = OptimConfig(**self.optim)
        if not self.anneal and self.lam <= 0 and self.energy_weight > 0:
            raise ValueError("lam must be > 0 unless annealing is on")

    def local_weight(self, epoch: int) -> float:
        """Weight of the token loss during 0-based epoch ``epoch``."""
        return anneal_weight(epoch) if self.anneal else self.lam

    def to_json(self) -> dict:
        return asdict(self)


def infnet_loss(model: InfNet, tokens, gold, frozen: FrozenEnergy | None, lam: float,
                energy_weight: float = 1.0, train: bool = False,
                rng: np.random.Generator | None = None, teacher_forcing: bool = False) -> Tensor:
    """``energy_weight * E(x, A(x)) + lam * token_loss`` for one sentence.

    The energy term sees the frozen CRF's unary table and transitions as
    constants, so gradients only reach the inference network.
    """
    gold = np.asarray(gold, dtype=np.int64)
    prev = gold if teacher_forcing else None
    _, dists = infnet_forward(tokens, model, "train" if train else "eval", rng, prev)
    loss = None
    if lam:
        loss = token_loss(gold, dists) * lam
    if energy_weight:
        if frozen is None:
            raise ValueError("the energy term needs a frozen energy model")
        e = relaxed_energy(frozen.unary(tokens), frozen.W, dists) * energy_weight
        loss = e if loss is None else loss + e
    if loss is None:
        raise ValueError("both loss terms have zero weight")
    return loss


def _train(train: Corpus, dev: Corpus, frozen: FrozenEnergy | None, config: InfNetTrainConfig,
           labels: LabelVocab, table: EmbeddingTable | None) -> tuple[InfNet, TrainLog]:
    check_nonempty(train, "training corpus")
    check_nonempty(dev)
    model = build_infnet(train, labels, config.model, table)
    gold = [labels.encode(ex.labels) for ex in train]
    dev_gold = [labels.encode(ex.labels) for ex in dev]
    forcing = config.model.teacher_forcing and model.family == "seq2seq"

    def loss_fn(i, epoch, rng, is_train):
        lam = config.local_weight(max(epoch - 1, 0))
        return infnet_loss(model, train[i].tokens, gold[i], frozen, lam, config.energy_weight,
                           is_train, rng, forcing and is_train)

    def dev_metric():
        pred = [model.predict(ex.tokens) for ex in dev]
        return evaluate_labels(dev_gold, pred, labels, config.metric)

    schedule = config.local_weight
    history = fit(model, len(train), loss_fn, dev_metric, config.optim, weight_schedule=schedule)
    return model, history


def train_infnet(train: Corpus, dev: Corpus, frozen: FrozenEnergy, config: InfNetTrainConfig,
                 table: EmbeddingTable | None = None) -> tuple[InfNet, TrainLog]:
    """Train ``A(x)`` to minimize the frozen CRF energy plus the weighted token loss.

    Word embeddings start from ``table``, or from the CRF's own table when
    none is given. The energy model is never updated.
    """
    if table is None:
        table = table_of(frozen.model.encoder)
    return _train(train, dev, frozen, config, frozen.labels, table)


def train_local_baseline(train: Corpus, dev: Corpus, config: InfNetTrainConfig,
                         labels: LabelVocab | None = None,
                         table: EmbeddingTable | None = None) -> tuple[InfNet, TrainLog]:
    """Token-loss-only training (the energy weight is forced to 0)."""
    lam = config.lam if config.lam > 0 else 1.0
    local = InfNetTrainConfig(config.model, lam, config.anneal, 0.0, config.optim, config.metric)
    return _train(train, dev, None, local, labels or LabelVocab.build(train), table)
