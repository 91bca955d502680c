"""Token accuracy (with the ``*`` rule) and conlleval-style span F1."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .labels import STAR, LabelVocab


def _as_sentences(seqs) -> list[Sequence]:
    seqs = list(seqs)
    if seqs and isinstance(seqs[0], (str, int, np.integer)):
        return [seqs]
    return seqs


def token_accuracy(gold, pred, vocab: LabelVocab | None = None) -> float:
    """Percentage of correct tokens; a gold ``*`` is always counted wrong.

    ``gold``/``pred`` are one sequence or a list of sequences, of label
    strings, or of indices when ``vocab`` is given.
    """
    gold_s, pred_s = _as_sentences(gold), _as_sentences(pred)
    if len(gold_s) != len(pred_s):
        raise ValueError("gold and pred have different numbers of sentences")
    star = STAR if vocab is None else vocab.star_index
    correct = total = 0
    for g_seq, p_seq in zip(gold_s, pred_s):
        if len(g_seq) != len(p_seq):
            raise ValueError(f"length mismatch: {len(g_seq)} gold vs {len(p_seq)} pred")
        for g, p in zip(g_seq, p_seq):
            total += 1
            if g == p and not (star is not None and g == star):
                correct += 1
    if total == 0:
        raise ValueError("no tokens")
    return 100.0 * correct / total


def _split(tag: str) -> tuple[str, str]:
    if tag == "O" or "-" not in tag:
        return "O", ""
    prefix, kind = tag.split("-", 1)
    return prefix, kind


def _chunk_end(prev_prefix: str, prev_type: str, prefix: str, kind: str) -> bool:
    """Did a chunk end between the previous tag and this one (conlleval rules, IOBES-aware)."""
    if prev_prefix == "O":
        return False
    if prefix == "O":
        return True
    if prev_type != kind:
        return True
    return prefix in ("B", "S") or prev_prefix in ("E", "S")


def _chunk_start(prev_prefix: str, prev_type: str, prefix: str, kind: str) -> bool:
    if prefix == "O":
        return False
    if prev_prefix == "O":
        return True
    if prev_type != kind:
        return True
    return prefix in ("B", "S") or prev_prefix in ("E", "S")


def extract_spans(tags: Sequence[str]) -> set[tuple[str, int, int]]:
    """Chunks ``(type, start, end)`` (0-based, inclusive) decoded leniently as conlleval does."""
    spans = set()
    prev_prefix, prev_type = "O", ""
    start = None
    for t, tag in enumerate(list(tags) + ["O"]):
        prefix, kind = _split(tag)
        if start is not None and _chunk_end(prev_prefix, prev_type, prefix, kind):
            spans.add((prev_type, start, t - 1))
            start = None
        if _chunk_start(prev_prefix, prev_type, prefix, kind):
            start = t
        prev_prefix, prev_type = prefix, kind
    return spans


@dataclass(frozen=True)
class SpanScore:
    precision: float
    recall: float
    f1: float
    true_positives: int
    gold_spans: int
    pred_spans: int
    no_spans: bool = False

    def as_tuple(self) -> tuple[float, float, float]:
        return self.precision, self.recall, self.f1


def span_f1(gold, pred) -> SpanScore:
    """Micro-averaged span precision / recall / F1 in percent.

    An exact ``(type, start, end)`` match is a true positive. With no spans
    on either side every score is 0 and ``no_spans`` is set.
    """
    gold_s, pred_s = _as_sentences(gold), _as_sentences(pred)
    if len(gold_s) != len(pred_s):
        raise ValueError("gold and pred have different numbers of sentences")
    tp = n_gold = n_pred = 0
    for g_seq, p_seq in zip(gold_s, pred_s):
        if len(g_seq) != len(p_seq):
            raise ValueError("length mismatch between gold and pred")
        g_spans, p_spans = extract_spans(g_seq), extract_spans(p_seq)
        tp += len(g_spans & p_spans)
        n_gold += len(g_spans)
        n_pred += len(p_spans)
    precision = 100.0 * tp / n_pred if n_pred else 0.0
    recall = 100.0 * tp / n_gold if n_gold else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return SpanScore(precision, recall, f1, tp, n_gold, n_pred, no_spans=(n_gold == 0 and n_pred == 0))
