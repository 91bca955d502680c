"""Synthetic tagging corpora sampled from hidden Markov models."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .conll import Corpus, Example

ROW_TOL = 1e-9


class HmmSpecError(ValueError):
    pass


@dataclass
class HmmSpec:
    """States emit symbols; state ``k`` is written as ``state_names[k]``."""

    transition: np.ndarray  # (L, L), rows are next-state distributions
    emission: np.ndarray  # (L, V)
    initial: np.ndarray  # (L,)
    state_names: list[str] = field(default_factory=list)
    symbol_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.transition = np.asarray(self.transition, dtype=np.float64)
        self.emission = np.asarray(self.emission, dtype=np.float64)
        self.initial = np.asarray(self.initial, dtype=np.float64)
        if not self.state_names:
            self.state_names = [f"S{k}" for k in range(self.n_states)]
        if not self.symbol_names:
            self.symbol_names = [f"w{v}" for v in range(self.vocab_size)]
        self.validate()

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.emission.shape[1]

    def validate(self) -> None:
        L = self.transition.shape[0]
        if self.transition.shape != (L, L):
            raise HmmSpecError("transition must be square")
        if self.emission.ndim != 2 or self.emission.shape[0] != L:
            raise HmmSpecError("emission must have one row per state")
        if self.initial.shape != (L,):
            raise HmmSpecError("initial must have one entry per state")
        for name, m in (("transition", self.transition), ("emission", self.emission),
                        ("initial", self.initial[None, :])):
            if (m < 0).any() or not np.allclose(m.sum(axis=1), 1.0, atol=ROW_TOL, rtol=0):
                raise HmmSpecError(f"{name} rows must be probability distributions")
        if len(self.state_names) != L or len(self.symbol_names) != self.vocab_size:
            raise HmmSpecError("name lists do not match matrix sizes")

    def to_json(self) -> dict:
        return {
            "transition": self.transition.tolist(),
            "emission": self.emission.tolist(),
            "initial": self.initial.tolist(),
            "state_names": list(self.state_names),
            "symbol_names": list(self.symbol_names),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "HmmSpec":
        return cls(**doc)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json()), encoding="utf-8")


def _normalize(m: np.ndarray) -> np.ndarray:
    return m / m.sum(axis=-1, keepdims=True)


def deterministic_hmm(n_states: int, vocab_size: int, seed: int,
                      transition_concentration: float = 0.5) -> HmmSpec:
    """Each state emits from its own disjoint block of symbols.

    Labels are therefore a function of the tokens; transitions are Dirichlet
    draws so label sequences still vary.
    """
    if vocab_size < n_states:
        raise HmmSpecError("need at least one symbol per state")
    rng = np.random.default_rng(seed)
    owner = np.arange(vocab_size) % n_states
    emission = np.zeros((n_states, vocab_size))
    emission[owner, np.arange(vocab_size)] = 1.0
    transition = rng.dirichlet(np.full(n_states, transition_concentration), size=n_states)
    return HmmSpec(_normalize(transition), _normalize(emission), np.full(n_states, 1.0 / n_states))


def random_hmm(n_states: int, vocab_size: int, seed: int, transition_concentration: float = 0.2,
               emission_concentration: float = 0.2, ambiguity: float = 0.3) -> HmmSpec:
    """Sparse Dirichlet transitions; emissions mix a state-owned symbol block with
    Dirichlet noise of weight ``ambiguity`` so tokens alone under-determine labels."""
    rng = np.random.default_rng(seed)
    owner = np.arange(vocab_size) % n_states
    block = np.zeros((n_states, vocab_size))
    block[owner, np.arange(vocab_size)] = 1.0
    block = _normalize(block)
    noise = rng.dirichlet(np.full(vocab_size, emission_concentration), size=n_states)
    emission = (1.0 - ambiguity) * block + ambiguity * noise
    transition = rng.dirichlet(np.full(n_states, transition_concentration), size=n_states)
    return HmmSpec(_normalize(transition), _normalize(emission), np.full(n_states, 1.0 / n_states))


def sample_hmm(spec: HmmSpec, lengths, rng: np.random.Generator) -> list[tuple[np.ndarray, np.ndarray]]:
    """Draw (state ids, symbol ids) per requested length."""
    trans_cdf = np.cumsum(spec.transition, axis=1)
    emit_cdf = np.cumsum(spec.emission, axis=1)
    init_cdf = np.cumsum(spec.initial)
    out = []
    for n in lengths:
        u = rng.random((n, 2))
        states = np.empty(n, dtype=np.int64)
        s = min(int(np.searchsorted(init_cdf, u[0, 0], side="right")), spec.n_states - 1)
        states[0] = s
        for t in range(1, n):
            s = min(int(np.searchsorted(trans_cdf[s], u[t, 0], side="right")), spec.n_states - 1)
            states[t] = s
        symbols = np.array(
            [min(int(np.searchsorted(emit_cdf[k], u[t, 1], side="right")), spec.vocab_size - 1)
             for t, k in enumerate(states)],
            dtype=np.int64,
        )
        out.append((states, symbols))
    return out


def gen_hmm_corpus(spec: HmmSpec, num_sentences: int, length_range: tuple[int, int],
                   seed: int) -> Corpus:
    """``num_sentences`` i.i.d. sentences with lengths uniform in ``length_range`` (inclusive)."""
    spec.validate()
    lo, hi = length_range
    if lo < 1 or hi < lo:
        raise ValueError(f"bad length range {length_range}")
    rng = np.random.default_rng(seed)
    lengths = rng.integers(lo, hi + 1, size=num_sentences)
    corpus = []
    for states, symbols in sample_hmm(spec, lengths, rng):
        corpus.append(Example([spec.symbol_names[v] for v in symbols],
                              [spec.state_names[k] for k in states]))
    return corpus
