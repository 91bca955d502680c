"""Word embedding tables read from ``token v_1 ... v_d`` text files."""
from __future__ import annotations

import logging
from typing import Iterable

import numpy as np

from .conll import CorpusFormatError

log = logging.getLogger(__name__)

UNK = "<unk>"


class EmbeddingTable:
    """Token -> row map over a matrix whose row 0 is the UNK vector."""

    def __init__(self, tokens: Iterable[str], vectors: np.ndarray, lowercase: bool = True,
                 trainable: bool = False):
        tokens = list(tokens)
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] != len(tokens) + 1:
            raise CorpusFormatError("vectors must have one row per token plus the UNK row")
        self.tokens = tokens
        self.vectors = vectors
        self.lowercase = lowercase
        self.trainable = trainable
        self.vocab = {tok: i + 1 for i, tok in enumerate(tokens)}

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return self.vectors.shape[0]

    def key(self, token: str) -> str:
        return token.lower() if self.lowercase else token

    def index(self, token: str) -> int:
        return self.vocab.get(self.key(token), 0)

    def indices(self, tokens: Iterable[str]) -> np.ndarray:
        return np.array([self.index(t) for t in tokens], dtype=np.int64)

    def vector(self, token: str) -> np.ndarray:
        return self.vectors[self.index(token)]

    def extend(self, tokens: Iterable[str], rng: np.random.Generator, scale: float = 0.1) -> "EmbeddingTable":
        """New table that also covers ``tokens`` (fresh uniform vectors for unseen ones)."""
        new = []
        seen = set(self.vocab)
        for tok in tokens:
            k = self.key(tok)
            if k not in seen:
                seen.add(k)
                new.append(k)
        extra = rng.uniform(-scale, scale, size=(len(new), self.dim))
        return EmbeddingTable(self.tokens + new, np.vstack([self.vectors, extra]),
                              self.lowercase, self.trainable)


def random_embeddings(tokens: Iterable[str], dim: int, seed: int, lowercase: bool = True,
                      trainable: bool = False, scale: float = 0.1) -> EmbeddingTable:
    rng = np.random.default_rng(seed)
    unk = rng.uniform(-scale, scale, size=(1, dim))
    table = EmbeddingTable([], unk, lowercase, trainable)
    return table.extend(tokens, rng, scale)


def load_embeddings(path, dim: int, lowercase: bool = True, trainable: bool = False,
                    seed: int = 0, scale: float = 0.1) -> EmbeddingTable:
    """Parse an embedding text file.

    Every line must carry exactly ``dim`` values. Duplicate tokens (after
    optional lower-casing) keep the last vector and log a warning. The UNK
    vector is drawn uniformly from ``[-scale, scale]`` with ``seed``.
    """
    rows: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.rstrip("\n").split()
            if not parts:
                continue
            tok, vals = parts[0], parts[1:]
            if len(vals) != dim:
                raise CorpusFormatError(f"{path}:{lineno}: expected {dim} values, got {len(vals)}")
            key = tok.lower() if lowercase else tok
            if key in rows:
                log.warning("%s:%d: duplicate token %r, keeping the later vector", path, lineno, key)
                del rows[key]
            rows[key] = np.array(vals, dtype=np.float64)
    rng = np.random.default_rng(seed)
    unk = rng.uniform(-scale, scale, size=(1, dim))
    tokens = list(rows)
    mat = np.vstack([unk] + [rows[t][None, :] for t in tokens]) if tokens else unk
    return EmbeddingTable(tokens, mat, lowercase, trainable)
