"""Token -> input vector encoders shared by the CRF and the inference networks."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from .corpus import Corpus, EmbeddingTable, random_embeddings
from .numgrad import CharCNN, Module, Tensor, concat, dropout, take


@dataclass
class EncoderConfig:
    word_dim: int = 100
    lowercase: bool = True
    trainable_embeddings: bool = False
    char_cnn: bool = False
    char_dim: int = 30
    char_filters: int = 30
    char_width: int = 3
    dropout: float = 0.0

    @classmethod
    def for_variant(cls, variant: str, **overrides) -> "EncoderConfig":
        """``base``: fixed embeddings, no chars, no dropout. ``plus``: all three on."""
        if variant == "base":
            cfg = cls()
        elif variant == "plus":
            cfg = cls(trainable_embeddings=True, char_cnn=True, dropout=0.5)
        else:
            raise ValueError(f"unknown variant {variant!r}")
        for k, v in overrides.items():
            setattr(cfg, k, v)
        return cfg

    def to_json(self) -> dict:
        return asdict(self)


class WordEncoder(Module):
    """Word embedding (optionally concatenated with a char-CNN embedding)."""

    def __init__(self, table: EmbeddingTable, config: EncoderConfig, rng: np.random.Generator,
                 chars: Sequence[str] = ()):
        self.config = config
        self.tokens = list(table.tokens)
        self.lowercase = table.lowercase
        self._index = dict(table.vocab)
        self.emb = Tensor(table.vectors.copy(), requires_grad=config.trainable_embeddings)
        self.chars = list(chars)
        self._char_index = {c: i + 1 for i, c in enumerate(self.chars)}  # 0 = unknown char
        self.char_cnn = (
            CharCNN(len(self.chars) + 1, rng, config.char_dim, config.char_filters, config.char_width)
            if config.char_cnn else None
        )

    @classmethod
    def from_corpus(cls, corpus: Corpus, config: EncoderConfig, rng: np.random.Generator,
                    table: EmbeddingTable | None = None) -> "WordEncoder":
        words = [tok for ex in corpus for tok in ex.tokens]
        if table is None:
            table = random_embeddings(words, config.word_dim, seed=int(rng.integers(2**31)),
                                      lowercase=config.lowercase)
        else:
            config.word_dim = table.dim
            if config.trainable_embeddings:
                # fine-tuning needs rows for training words missing from the pretrained file
                table = table.extend(words, rng)
        chars = sorted({c for w in words for c in w})
        return cls(table, config, rng, chars)

    @property
    def out_dim(self) -> int:
        return self.emb.shape[1] + (self.config.char_filters if self.char_cnn is not None else 0)

    def word_ids(self, tokens: Iterable[str]) -> np.ndarray:
        keys = (t.lower() if self.lowercase else t for t in tokens)
        return np.array([self._index.get(k, 0) for k in keys], dtype=np.int64)

    def char_ids(self, tokens: Iterable[str]) -> list[np.ndarray]:
        return [np.array([self._char_index.get(c, 0) for c in tok], dtype=np.int64) for tok in tokens]

    def __call__(self, tokens: Sequence[str], train: bool = False,
                 rng: np.random.Generator | None = None) -> Tensor:
        if len(tokens) == 0:
            raise ValueError("empty sentence")
        x = take(self.emb, self.word_ids(tokens))
        if self.char_cnn is not None:
            c = self.char_cnn(self.char_ids(tokens), self.config.dropout, train, rng)
            x = concat([x, c], axis=1)
        return dropout(x, self.config.dropout, train, rng)

    def vocab_json(self) -> dict:
        return {"tokens": self.tokens, "lowercase": self.lowercase, "chars": self.chars}

    @classmethod
    def from_vocab_json(cls, doc: dict, config: EncoderConfig) -> "WordEncoder":
        dim = config.word_dim
        table = EmbeddingTable(doc["tokens"], np.zeros((len(doc["tokens"]) + 1, dim)), doc["lowercase"])
        return cls(table, config, np.random.default_rng(0), doc["chars"])
