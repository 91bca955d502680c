"""Inference networks: CNN, BLSTM and fixed-attention seq2seq taggers."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .. import checkpoint
from ..corpus import Corpus, EmbeddingTable, LabelVocab
from ..features import EncoderConfig, WordEncoder
from ..numgrad import (
    LSTM,
    Linear,
    Module,
    StackedBLSTM,
    Tensor,
    add,
    clip_min,
    concat,
    conv_window,
    dropout,
    log,
    matmul,
    neg,
    no_grad,
    softmax,
    stack,
    tsum,
    uniform_param,
)
from ..numgrad.nn import _lstm_step

logger = logging.getLogger(__name__)

FAMILIES = ("cnn", "blstm", "seq2seq")
WINDOW_SETS = {"01": (0, 1), "02": (0, 2)}
PROB_FLOOR = 1e-12


@dataclass
class InfNetConfig:
    family: str = "blstm"
    variant: str = "base"
    hidden: int = 100
    layers: int = 1
    windows: str = "01"  # cnn: half-widths {0, 1} or {0, 2}
    label_dim: int = 32  # seq2seq previous-label embedding size
    teacher_forcing: bool = False
    encoder: EncoderConfig | None = None
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}")
        if self.layers < 1:
            raise ValueError("layers must be >= 1")
        if self.layers > 1 and self.family != "blstm":
            raise ValueError("multi-layer inference networks are only defined for the blstm family")
        if self.windows not in WINDOW_SETS:
            raise ValueError(f"windows must be one of {sorted(WINDOW_SETS)}")
        if self.encoder is None:
            self.encoder = EncoderConfig.for_variant(self.variant)
        elif isinstance(self.encoder, dict):
            self.encoder = EncoderConfig(**self.encoder)

    def to_json(self) -> dict:
        return asdict(self)


class InfNet(Module):
    """Maps a sentence to an ``n x L`` table of logits."""

    family = ""

    def __init__(self, encoder: WordEncoder, labels: LabelVocab, config: InfNetConfig,
                 rng: np.random.Generator):
        self.encoder = encoder
        self.labels = labels
        self.config = config

    @property
    def n_labels(self) -> int:
        return len(self.labels)

    @property
    def dropout_rate(self) -> float:
        return self.config.encoder.dropout

    def forward(self, tokens: Sequence[str], train: bool = False, rng: np.random.Generator | None = None,
                prev_labels: np.ndarray | None = None) -> Tensor:
        raise NotImplementedError

    def logits(self, tokens: Sequence[str]) -> np.ndarray:
        with no_grad():
            return self.forward(tokens).data

    def predict(self, tokens: Sequence[str]) -> np.ndarray:
        return discretize(self.logits(tokens))

    # -- persistence ---------------------------------------------------
    def save(self, path, meta: dict | None = None) -> None:
        doc_meta = {"labels": self.labels.to_json(), "vocab": self.encoder.vocab_json()}
        doc_meta.update(meta or {})
        checkpoint.save(path, "infnet", self, self.config.to_json(), doc_meta, family=self.family)

    @staticmethod
    def load(path) -> "InfNet":
        doc = checkpoint.read(path, kind="infnet")
        config = InfNetConfig(**doc["config"])
        if doc.get("family") != config.family:
            raise checkpoint.CheckpointError(f"{path}: family tag does not match config")
        encoder = WordEncoder.from_vocab_json(doc["meta"]["vocab"], config.encoder)
        model = FAMILY_CLASSES[config.family](
            encoder, LabelVocab.from_json(doc["meta"]["labels"]), config, np.random.default_rng(0))
        model.load_state_dict(checkpoint.params_from_json(doc["params"]))
        return model


class CnnInfNet(InfNet):
    """Two window feature maps, concatenated, feeding a softmax layer.

    Row t depends only on tokens within the widest window around t.
    """

    family = "cnn"

    def __init__(self, encoder, labels, config, rng):
        super().__init__(encoder, labels, config, rng)
        d, H = encoder.out_dim, config.hidden
        self.half_widths = WINDOW_SETS[config.windows]
        self.filters = [uniform_param(rng, ((2 * w + 1) * d, H)) for w in self.half_widths]
        self.biases = [uniform_param(rng, (H,)) for _ in self.half_widths]
        self.pad = uniform_param(rng, (d,))
        self.out = Linear(H * len(self.half_widths), len(labels), rng)

    def forward(self, tokens, train=False, rng=None, prev_labels=None):
        x = self.encoder(tokens, train, rng)
        maps = [conv_window(x, w, W, b, self.pad)
                for w, W, b in zip(self.half_widths, self.filters, self.biases)]
        return self.out(dropout(concat(maps, axis=1), self.dropout_rate, train, rng))


class BlstmInfNet(InfNet):
    """BLSTM tagger (optionally stacked) with a per-position softmax layer."""

    family = "blstm"

    def __init__(self, encoder, labels, config, rng):
        super().__init__(encoder, labels, config, rng)
        self.rnn = StackedBLSTM(encoder.out_dim, config.hidden, config.layers, rng)
        self.out = Linear(self.rnn.out_dim, len(labels), rng)

    def forward(self, tokens, train=False, rng=None, prev_labels=None):
        x = self.encoder(tokens, train, rng)
        h = self.rnn(x, self.dropout_rate, train, rng)
        return self.out(dropout(h, self.dropout_rate, train, rng))


class Seq2SeqInfNet(InfNet):
    """BLSTM encoder states ``s_t`` plus a left-to-right LSTM decoder ``h_t``.

    Position t is scored by ``W_s [h_t; s_t]`` (attention fixed on input t).
    The decoder reads an embedding of the label chosen at t-1: the argmax of
    its own previous output unless ``prev_labels`` forces the sequence, where
    ``prev_labels[t]`` is the label fed to step ``t + 1``. Step 0 reads a
    dedicated start embedding.
    """

    family = "seq2seq"

    def __init__(self, encoder, labels, config, rng):
        super().__init__(encoder, labels, config, rng)
        H, L = config.hidden, len(labels)
        self.enc = StackedBLSTM(encoder.out_dim, H, 1, rng)
        self.label_emb = uniform_param(rng, (L + 1, config.label_dim))  # last row = start
        self.dec = LSTM(config.label_dim, H, rng)
        # W_s split into its decoder and encoder column blocks
        self.out_h = uniform_param(rng, (H, L))
        self.out_s = uniform_param(rng, (2 * H, L))
        self.out_b = uniform_param(rng, (L,))

    def forward(self, tokens, train=False, rng=None, prev_labels=None):
        x = self.encoder(tokens, train, rng)
        s = dropout(self.enc(x), self.dropout_rate, train, rng)
        n = len(tokens)
        if prev_labels is not None and len(prev_labels) != n:
            raise ValueError("prev_labels must have one entry per token")
        enc_scores = add(matmul(s, self.out_s), self.out_b)
        label_proj = add(matmul(self.label_emb, self.dec.Wx), self.dec.b)
        h, c = self.dec.initial_state()
        prev = self.n_labels
        rows = []
        for t in range(n):
            h, c = _lstm_step(label_proj[prev], h, c, self.dec.Wh, self.config.hidden)
            row = add(matmul(dropout(h, self.dropout_rate, train, rng), self.out_h), enc_scores[t])
            rows.append(row)
            prev = int(prev_labels[t]) if prev_labels is not None else int(np.argmax(row.data))
        return stack(rows, axis=0)


FAMILY_CLASSES = {"cnn": CnnInfNet, "blstm": BlstmInfNet, "seq2seq": Seq2SeqInfNet}


def build_infnet(corpus: Corpus, labels: LabelVocab, config: InfNetConfig,
                 table: EmbeddingTable | None = None) -> InfNet:
    rng = np.random.default_rng(config.seed)
    encoder = WordEncoder.from_corpus(corpus, config.encoder, rng, table)
    return FAMILY_CLASSES[config.family](encoder, labels, config, rng)


def infnet_forward(tokens: Sequence[str], model: InfNet, mode: str = "eval",
                   rng: np.random.Generator | None = None,
                   prev_labels: np.ndarray | None = None) -> tuple[Tensor, Tensor]:
    """``(logits, row-softmax distributions)`` for one sentence."""
    if mode not in ("train", "eval"):
        raise ValueError("mode must be 'train' or 'eval'")
    if len(tokens) == 0:
        raise ValueError("empty sentence")
    logits = model.forward(tokens, mode == "train", rng, prev_labels)
    return logits, softmax(logits, axis=1)


def token_loss(gold, dists) -> Tensor:
    """Summed cross-entropy of gold labels under per-position distributions.

    Probabilities below 1e-12 at the gold label are clamped (and logged).
    """
    dists = dists if isinstance(dists, Tensor) else Tensor(dists)
    gold = np.asarray(gold, dtype=np.int64)
    if gold.shape != (dists.shape[0],):
        raise ValueError("gold labeling length does not match distributions")
    p = dists[np.arange(len(gold)), gold]
    if (p.data < PROB_FLOOR).any():
        logger.warning("gold-label probability below %g clamped", PROB_FLOOR)
    return neg(tsum(log(clip_min(p, PROB_FLOOR))))


def discretize(scores) -> np.ndarray:
    """Row-wise argmax (first maximum wins) of distributions or logits."""
    arr = scores.data if isinstance(scores, Tensor) else np.asarray(scores)
    return np.argmax(arr, axis=1).astype(np.int64)


def table_of(encoder: WordEncoder) -> EmbeddingTable:
    """The encoder's word embeddings as a table (used to share an initialization)."""
    return EmbeddingTable(encoder.tokens, encoder.emb.data.copy(), encoder.lowercase)
