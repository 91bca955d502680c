"""Label vocabularies, BIOES conversion and top-K label truncation."""
from __future__ import annotations

import logging
from collections import Counter
from typing import Iterable, Sequence

import numpy as np

from .conll import Corpus, CorpusFormatError, Example

log = logging.getLogger(__name__)

STAR = "*"


class LabelVocab:
    """Bijective label string <-> index map."""

    def __init__(self, labels: Sequence[str]):
        self.labels: tuple[str, ...] = tuple(labels)
        self.index = {lab: i for i, lab in enumerate(self.labels)}
        if len(self.index) != len(self.labels):
            raise CorpusFormatError("duplicate label in vocabulary")

    @classmethod
    def build(cls, corpus: Iterable[Example]) -> "LabelVocab":
        """Labels ordered by decreasing count, then alphabetically."""
        counts = Counter(lab for ex in corpus for lab in ex.labels)
        return cls(sorted(counts, key=lambda lab: (-counts[lab], lab)))

    def __len__(self) -> int:
        return len(self.labels)

    def __contains__(self, label: str) -> bool:
        return label in self.index

    def __eq__(self, other) -> bool:
        return isinstance(other, LabelVocab) and self.labels == other.labels

    def __repr__(self) -> str:
        return f"LabelVocab({len(self)} labels{', with *' if self.has_star else ''})"

    @property
    def has_star(self) -> bool:
        return STAR in self.index

    @property
    def star_index(self) -> int | None:
        return self.index.get(STAR)

    def encode(self, labels: Sequence[str]) -> np.ndarray:
        try:
            return np.array([self.index[lab] for lab in labels], dtype=np.int64)
        except KeyError as exc:
            if self.has_star:
                return np.array([self.index.get(lab, self.index[STAR]) for lab in labels], dtype=np.int64)
            raise CorpusFormatError(f"unknown label {exc.args[0]!r}") from exc

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self.labels[int(i)] for i in ids]

    def to_json(self) -> dict:
        return {"labels": list(self.labels)}

    @classmethod
    def from_json(cls, doc: dict) -> "LabelVocab":
        return cls(doc["labels"])


def _split(tag: str) -> tuple[str, str | None]:
    if tag == "O" or "-" not in tag:
        return "O", None
    prefix, kind = tag.split("-", 1)
    return prefix, kind


def to_bioes(bio: Sequence[str]) -> list[str]:
    """Rewrite a BIO sequence in BIOES.

    An ``I-X`` that does not continue a span of type X is repaired to
    ``B-X`` (and logged) before conversion.
    """
    fixed: list[str] = []
    prev_type = None
    for t, tag in enumerate(bio):
        prefix, kind = _split(tag)
        if prefix == "I" and prev_type != kind:
            log.warning("position %d: %s does not continue a span; repaired to B-%s", t, tag, kind)
            prefix = "B"
        if prefix not in ("B", "I", "O"):
            raise CorpusFormatError(f"not a BIO tag: {tag!r}")
        fixed.append("O" if prefix == "O" else f"{prefix}-{kind}")
        prev_type = kind if prefix != "O" else None

    out: list[str] = []
    for t, tag in enumerate(fixed):
        prefix, kind = _split(tag)
        nxt = fixed[t + 1] if t + 1 < len(fixed) else "O"
        continues = nxt == f"I-{kind}"
        if prefix == "O":
            out.append("O")
        elif prefix == "B":
            out.append(f"B-{kind}" if continues else f"S-{kind}")
        else:
            out.append(f"I-{kind}" if continues else f"E-{kind}")
    return out


def bio_spans(bio: Sequence[str]) -> list[tuple[str, int, int]]:
    """Typed spans ``(type, start, end)`` (0-based, inclusive) of a valid BIO sequence."""
    spans = []
    start = kind = None
    for t, tag in enumerate(list(bio) + ["O"]):
        prefix, k = _split(tag)
        if kind is not None and not (prefix == "I" and k == kind):
            spans.append((kind, start, t - 1))
            kind = None
        if prefix == "B" or (prefix == "I" and kind is None):
            start, kind = t, k
    return spans


def truncate_labels(corpus: Corpus, k: int) -> tuple[Corpus, LabelVocab]:
    """Keep the ``k`` most frequent labels; rewrite the rest to ``*``.

    When ``k`` covers every distinct label the corpus is returned unchanged
    and no ``*`` is added.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    counts = Counter(lab for ex in corpus for lab in ex.labels)
    ranked = sorted(counts, key=lambda lab: (-counts[lab], lab))
    if k >= len(ranked):
        log.info("truncate_labels: k=%d >= %d distinct labels, no-op", k, len(ranked))
        return list(corpus), LabelVocab(ranked)
    vocab = LabelVocab(ranked[:k] + [STAR])
    return apply_vocab(corpus, vocab), vocab


def apply_vocab(corpus: Corpus, vocab: LabelVocab) -> Corpus:
    """Rewrite labels outside ``vocab`` to ``*`` (the vocab must contain it)."""
    out = []
    for ex in corpus:
        labels = [lab if lab in vocab else STAR for lab in ex.labels]
        if STAR in labels and not vocab.has_star:
            raise CorpusFormatError("corpus has labels outside a vocabulary without '*'")
        out.append(Example(ex.tokens, labels))
    return out
