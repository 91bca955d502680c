"""Search error and rank correlation."""
from __future__ import annotations

import logging
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from ..crf.inference import path_energy, viterbi
from ..crf.model import FrozenEnergy

log = logging.getLogger(__name__)

SEARCH_TOL = 1e-9


class SearchErrorViolation(AssertionError):
    """A method found a lower energy than Viterbi, so exact inference is broken."""


def check_search_error(value: float, where: str = "") -> float:
    if value < -SEARCH_TOL:
        raise SearchErrorViolation(f"negative search error {value!r}{' at ' + where if where else ''}")
    return value


def search_error(tokens: Sequence[str], y_method, frozen: FrozenEnergy, y_viterbi=None) -> float:
    """``E(x, y_method) - E(x, y_viterbi)``; raises if below -1e-9."""
    unary, W = frozen.unary(tokens), frozen.W
    if y_viterbi is None:
        y_viterbi, _ = viterbi(unary, W)
    if len(y_method) != len(y_viterbi):
        raise ValueError("labelings differ in length")
    return check_search_error(path_energy(unary, W, y_method) - path_energy(unary, W, y_viterbi))


def spearman_rho(a: Sequence[float], b: Sequence[float]) -> float | None:
    """Spearman's rank correlation with average ranks for ties.

    Returns ``None`` (and logs) when either input is constant, where the
    coefficient is undefined.
    """
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("inputs must be 1-D sequences of equal length")
    if len(a) < 2:
        raise ValueError("need at least two observations")
    ra, rb = rankdata(a), rankdata(b)
    if np.ptp(ra) == 0 or np.ptp(rb) == 0:
        log.warning("spearman_rho undefined for a constant input")
        return None
    ra, rb = ra - ra.mean(), rb - rb.mean()
    return float(np.dot(ra, rb) / np.sqrt(np.dot(ra, ra) * np.dot(rb, rb)))
