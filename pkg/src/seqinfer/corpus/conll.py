"""CoNLL column files and the JSON corpus form."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

CORPUS_FORMAT = "seqinfer-corpus"
CORPUS_VERSION = 1


class CorpusFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Example:
    """A pre-tokenized sentence and its gold label strings."""

    tokens: tuple[str, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "labels", tuple(self.labels))
        if not self.tokens:
            raise CorpusFormatError("sentence must have at least one token")
        if any(not t for t in self.tokens):
            raise CorpusFormatError("empty token")
        if len(self.tokens) != len(self.labels):
            raise CorpusFormatError(
                f"{len(self.tokens)} tokens but {len(self.labels)} labels"
            )

    def __len__(self) -> int:
        return len(self.tokens)


Corpus = list[Example]


def load_conll(path, token_col: int = 0, label_col: int = -1) -> Corpus:
    """Read whitespace-separated columns; blank lines end sentences.

    Lines starting with ``-DOCSTART-`` are skipped. Every token line of the
    file must have the same number of columns.
    """
    corpus: Corpus = []
    tokens: list[str] = []
    labels: list[str] = []
    width = None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if line.startswith("-DOCSTART-"):
                continue
            if not line:
                if tokens:
                    corpus.append(Example(tokens, labels))
                    tokens, labels = [], []
                continue
            cols = line.split()
            if width is None:
                width = len(cols)
            elif len(cols) != width:
                raise CorpusFormatError(
                    f"{path}:{lineno}: ragged columns ({len(cols)} vs {width})"
                )
            try:
                tokens.append(cols[token_col])
                labels.append(cols[label_col])
            except IndexError as exc:
                raise CorpusFormatError(f"{path}:{lineno}: missing column") from exc
    if tokens:
        corpus.append(Example(tokens, labels))
    if not corpus:
        raise CorpusFormatError(f"{path}: empty corpus")
    return corpus


def write_conll(corpus: Iterable[Example], path, extra_columns: Sequence[Sequence[Sequence[str]]] = ()) -> None:
    """Write ``token label [extra...]`` lines with a blank line after each sentence.

    ``extra_columns[k][i][t]`` is column k for token t of sentence i.
    """
    with open(path, "w", encoding="utf-8") as fh:
        for i, ex in enumerate(corpus):
            for t, (tok, lab) in enumerate(zip(ex.tokens, ex.labels)):
                cols = [tok, lab] + [str(col[i][t]) for col in extra_columns]
                fh.write(" ".join(cols) + "\n")
            fh.write("\n")


def corpus_to_json(corpus: Iterable[Example]) -> dict:
    return {
        "format": CORPUS_FORMAT,
        "version": CORPUS_VERSION,
        "sentences": [{"tokens": list(ex.tokens), "labels": list(ex.labels)} for ex in corpus],
    }


def corpus_from_json(doc: dict) -> Corpus:
    if doc.get("format") != CORPUS_FORMAT:
        raise CorpusFormatError("not a seqinfer corpus document")
    if doc.get("version") != CORPUS_VERSION:
        raise CorpusFormatError(f"unsupported corpus version {doc.get('version')}")
    return [Example(s["tokens"], s["labels"]) for s in doc["sentences"]]


def save_corpus_json(corpus: Iterable[Example], path) -> None:
    Path(path).write_text(json.dumps(corpus_to_json(corpus)), encoding="utf-8")


def load_corpus_json(path) -> Corpus:
    return corpus_from_json(json.loads(Path(path).read_text(encoding="utf-8")))
