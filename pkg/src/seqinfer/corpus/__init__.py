"""Corpus ingestion, label spaces, metrics and synthetic data."""
from .conll import (
    Corpus,
    CorpusFormatError,
    Example,
    corpus_from_json,
    corpus_to_json,
    load_conll,
    load_corpus_json,
    save_corpus_json,
    write_conll,
)
from .embeddings import UNK, EmbeddingTable, load_embeddings, random_embeddings
from .hmm import HmmSpec, HmmSpecError, deterministic_hmm, gen_hmm_corpus, random_hmm, sample_hmm
from .labels import STAR, LabelVocab, apply_vocab, bio_spans, to_bioes, truncate_labels
from .metrics import SpanScore, extract_spans, span_f1, token_accuracy

__all__ = [
    "Corpus",
    "CorpusFormatError",
    "Example",
    "corpus_from_json",
    "corpus_to_json",
    "load_conll",
    "load_corpus_json",
    "save_corpus_json",
    "write_conll",
    "UNK",
    "EmbeddingTable",
    "load_embeddings",
    "random_embeddings",
    "HmmSpec",
    "HmmSpecError",
    "deterministic_hmm",
    "gen_hmm_corpus",
    "random_hmm",
    "sample_hmm",
    "STAR",
    "LabelVocab",
    "apply_vocab",
    "bio_spans",
    "to_bioes",
    "truncate_labels",
    "SpanScore",
    "extract_spans",
    "span_f1",
    "token_accuracy",
]
