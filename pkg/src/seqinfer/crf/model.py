"""BLSTM-CRF energy model, likelihood training and checkpoints."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .. import checkpoint
from ..corpus import Corpus, EmbeddingTable, LabelVocab, span_f1, token_accuracy
from ..features import EncoderConfig, WordEncoder
from ..numgrad import BLSTM, Module, Tensor, dropout, matmul, no_grad, transpose, uniform_param
from ..training import OptimConfig, TrainLog, check_nonempty, fit
from .inference import gold_energy, log_partition, viterbi

VARIANTS = ("base", "plus")


@dataclass
class CrfConfig:
    variant: str = "base"
    hidden: int = 100
    encoder: EncoderConfig | None = None
    seed: int = 0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.encoder is None:
            self.encoder = EncoderConfig.for_variant(self.variant)
        elif isinstance(self.encoder, dict):
            self.encoder = EncoderConfig(**self.encoder)

    def to_json(self) -> dict:
        return asdict(self)


class EnergyModel(Module):
    """``E(x, y) = -(sum_t u_{y_t} . f(x, t) + sum_{t>=2} W[y_{t-1}, y_t])`` with f a BLSTM."""

    def __init__(self, encoder: WordEncoder, labels: LabelVocab, config: CrfConfig,
                 rng: np.random.Generator):
        self.config = config
        self.labels = labels
        self.encoder = encoder
        self.blstm = BLSTM(encoder.out_dim, config.hidden, rng)
        self.U = uniform_param(rng, (len(labels), self.blstm.out_dim))
        self.W = uniform_param(rng, (len(labels), len(labels)))

    @classmethod
    def build(cls, corpus: Corpus, labels: LabelVocab, config: CrfConfig,
              table: EmbeddingTable | None = None) -> "EnergyModel":
        rng = np.random.default_rng(config.seed)
        encoder = WordEncoder.from_corpus(corpus, config.encoder, rng, table)
        return cls(encoder, labels, config, rng)

    @property
    def n_labels(self) -> int:
        return len(self.labels)

    @property
    def variant(self) -> str:
        return self.config.variant

    @property
    def dropout_rate(self) -> float:
        return self.config.encoder.dropout

    def features(self, tokens: Sequence[str], train: bool = False,
                 rng: np.random.Generator | None = None) -> Tensor:
        h = self.blstm(self.encoder(tokens, train, rng))
        return dropout(h, self.dropout_rate, train, rng)

    def unary(self, tokens: Sequence[str], train: bool = False,
              rng: np.random.Generator | None = None) -> Tensor:
        return matmul(self.features(tokens, train, rng), transpose(self.U))

    def unary_table(self, tokens: Sequence[str]) -> np.ndarray:
        """Eval-mode unary table as a plain array (no graph)."""
        with no_grad():
            return self.unary(tokens).data

    def transitions(self) -> np.ndarray:
        return self.W.data

    def nll(self, tokens: Sequence[str], gold: np.ndarray, train: bool = False,
            rng: np.random.Generator | None = None) -> Tensor:
        u = self.unary(tokens, train, rng)
        return log_partition(u, self.W) + gold_energy(u, self.W, gold)

    def decode(self, tokens: Sequence[str]) -> tuple[np.ndarray, float]:
        return viterbi(self.unary_table(tokens), self.W.data)

    def frozen(self) -> "FrozenEnergy":
        return FrozenEnergy(self)

    # -- persistence ---------------------------------------------------
    def save(self, path) -> None:
        meta = {"labels": self.labels.to_json(), "vocab": self.encoder.vocab_json()}
        checkpoint.save(path, "crf", self, self.config.to_json(), meta, family=self.variant)

    @classmethod
    def load(cls, path) -> "EnergyModel":
        doc = checkpoint.read(path, kind="crf")
        config = CrfConfig(**doc["config"])
        encoder = WordEncoder.from_vocab_json(doc["meta"]["vocab"], config.encoder)
        model = cls(encoder, LabelVocab.from_json(doc["meta"]["labels"]), config, np.random.default_rng(0))
        model.load_state_dict(checkpoint.params_from_json(doc["params"]))
        return model


class FrozenEnergy:
    """Read-only snapshot of an energy model: cached eval-mode unary tables + W.

    Inference and inference-network training only ever see this view, so no
    gradient can reach the CRF parameters.
    """

    def __init__(self, model: EnergyModel):
        self.model = model
        self.W = model.W.data.copy()
        self.labels = model.labels
        self._cache: dict[tuple[str, ...], np.ndarray] = {}

    @property
    def n_labels(self) -> int:
        return len(self.labels)

    def unary(self, tokens: Sequence[str]) -> np.ndarray:
        key = tuple(tokens)
        table = self._cache.get(key)
        if table is None:
            table = self.model.unary_table(key)
            self._cache[key] = table
        return table


def unary_potentials(tokens: Sequence[str], model: EnergyModel, mode: str = "eval",
                     rng: np.random.Generator | None = None) -> Tensor:
    if mode not in ("train", "eval"):
        raise ValueError("mode must be 'train' or 'eval'")
    return model.unary(tokens, mode == "train", rng)


def crf_nll(tokens: Sequence[str], gold, model: EnergyModel, mode: str = "eval",
            rng: np.random.Generator | None = None) -> Tensor:
    """``log Z(x) + E(x, gold)``; nonnegative, differentiable in every model parameter."""
    gold = np.asarray(gold, dtype=np.int64)
    if len(gold) != len(tokens):
        raise ValueError("gold labeling length does not match sentence")
    return model.nll(tokens, gold, mode == "train", rng)


def evaluate_labels(gold: list[np.ndarray], pred: list[np.ndarray], labels: LabelVocab,
                    metric: str) -> float:
    if metric == "accuracy":
        return token_accuracy(gold, pred, labels)
    if metric == "f1":
        return span_f1([labels.decode(g) for g in gold], [labels.decode(p) for p in pred]).f1
    raise ValueError(f"unknown metric {metric!r}")


@dataclass
class CrfTrainConfig:
    model: CrfConfig = field(default_factory=CrfConfig)
    optim: OptimConfig = field(default_factory=OptimConfig)
    metric: str = "accuracy"

    def __post_init__(self):
        if isinstance(self.model, dict):
            self.model = CrfConfig(**self.model)
        if isinstance(self.optim, dict):
            self.optim = OptimConfig(**self.optim)

    def to_json(self) -> dict:
        return asdict(self)


def train_crf(train: Corpus, dev: Corpus, config: CrfTrainConfig, labels: LabelVocab | None = None,
              table: EmbeddingTable | None = None) -> tuple[EnergyModel, TrainLog]:
    """Conditional log-likelihood training; returns the best-dev checkpoint."""
    check_nonempty(train, "training corpus")
    check_nonempty(dev)
    labels = labels or LabelVocab.build(train)
    model = EnergyModel.build(train, labels, config.model, table)
    gold = [labels.encode(ex.labels) for ex in train]
    dev_gold = [labels.encode(ex.labels) for ex in dev]

    def loss_fn(i, epoch, rng, is_train):
        return model.nll(train[i].tokens, gold[i], is_train, rng)

    def dev_metric():
        pred = [model.decode(ex.tokens)[0] for ex in dev]
        return evaluate_labels(dev_gold, pred, labels, config.metric)

    history = fit(model, len(train), loss_fn, dev_metric, config.optim)
    return model, history
