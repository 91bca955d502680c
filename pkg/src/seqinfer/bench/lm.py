"""Left-to-right LSTM language model over word or label sequences."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .. import checkpoint
from ..numgrad import LSTM, Linear, Module, Tensor, log_softmax, neg, no_grad, take, tsum, uniform_param
from ..training import OptimConfig, TrainLog, fit

UNK = "<unk>"


@dataclass
class LmConfig:
    hidden: int = 64
    emb_dim: int = 32
    min_count: int = 1
    optim: OptimConfig = field(default_factory=lambda: OptimConfig(lr=0.1, epochs=5))
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.optim, dict):
            self.optim = OptimConfig(**self.optim)

    def to_json(self) -> dict:
        return asdict(self)


class LstmLm(Module):
    """Predicts each symbol and a final end-of-sequence event.

    The vocabulary includes UNK, so the output layer has ``len(vocab) + 1``
    entries (the last one is EOS). Input at step 0 is a start embedding.
    """

    def __init__(self, vocab: Sequence[str], config: LmConfig, rng: np.random.Generator):
        self.config = config
        self.vocab = list(vocab)
        if UNK not in self.vocab:
            self.vocab.insert(0, UNK)
        self.index = {s: i for i, s in enumerate(self.vocab)}
        self.emb = uniform_param(rng, (len(self.vocab) + 1, config.emb_dim))  # last row = start
        self.rnn = LSTM(config.emb_dim, config.hidden, rng)
        self.out = Linear(config.hidden, len(self.vocab) + 1, rng)

    @property
    def eos(self) -> int:
        return len(self.vocab)

    def encode(self, seq: Sequence[str]) -> np.ndarray:
        unk = self.index[UNK]
        return np.array([self.index.get(s, unk) for s in seq], dtype=np.int64)

    def nll(self, seq: Sequence[str]) -> Tensor:
        """Summed negative log-probability of ``seq`` followed by EOS."""
        ids = self.encode(seq)
        inputs = np.concatenate([[len(self.vocab)], ids])
        targets = np.concatenate([ids, [self.eos]])
        h = self.rnn.run(take(self.emb, inputs))
        logp = log_softmax(self.out(h), axis=1)
        return neg(tsum(logp[np.arange(len(targets)), targets]))

    def save(self, path) -> None:
        checkpoint.save(path, "lm", self, self.config.to_json(), {"vocab": self.vocab})

    @classmethod
    def load(cls, path) -> "LstmLm":
        doc = checkpoint.read(path, kind="lm")
        model = cls(doc["meta"]["vocab"], LmConfig(**doc["config"]), np.random.default_rng(0))
        model.load_state_dict(checkpoint.params_from_json(doc["params"]))
        return model


def lm_perplexity(model: LstmLm, seq: Sequence[str]) -> float:
    """``exp`` of the mean per-symbol negative log-probability, EOS included."""
    with no_grad():
        return math.exp(model.nll(seq).item() / (len(seq) + 1))


def build_vocab(sequences: Sequence[Sequence[str]], min_count: int = 1) -> list[str]:
    counts = Counter(s for seq in sequences for s in seq)
    return [UNK] + sorted(s for s, c in counts.items() if c >= min_count and s != UNK)


def train_lm(sequences: Sequence[Sequence[str]], config: LmConfig | None = None,
             dev: Sequence[Sequence[str]] | None = None) -> tuple[LstmLm, TrainLog]:
    """Fit an LSTM LM; early stopping watches dev perplexity (training data if no dev)."""
    config = config or LmConfig()
    sequences = [list(s) for s in sequences]
    if not sequences:
        raise ValueError("empty training set")
    rng = np.random.default_rng(config.seed)
    model = LstmLm(build_vocab(sequences, config.min_count), config, rng)
    held = [list(s) for s in dev] if dev else sequences

    def loss_fn(i, epoch, rng, is_train):
        return model.nll(sequences[i])

    def dev_metric():
        with no_grad():
            total = sum(model.nll(s).item() for s in held)
        return -math.exp(total / sum(len(s) + 1 for s in held))

    history = fit(model, len(sequences), loss_fn, dev_metric, config.optim)
    return model, history
