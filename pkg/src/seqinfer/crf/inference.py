"""Linear-chain energies and exact inference over unary tables.

Scores are ``s(y) = -E(y)``. The unary table holds ``u_i . f(x, t)`` at
``[t, i]``; ``W[i, j]`` scores the transition from label ``i`` at ``t-1``
to label ``j`` at ``t``. There are no start/stop potentials: the
transition sum runs over ``t = 2..n``.
"""
from __future__ import annotations

import numba
import numpy as np

from ..numgrad import Tensor, as_tensor, logsumexp, matmul, mul, neg, tsum

BRUTE_FORCE_LIMIT = 10**7


class InstanceTooLarge(ValueError):
    pass


def _check_tables(unary: np.ndarray, W: np.ndarray) -> None:
    if unary.ndim != 2 or unary.shape[0] == 0:
        raise ValueError(f"unary must be a non-empty (n, L) table, got {unary.shape}")
    L = unary.shape[1]
    if W.shape != (L, L):
        raise ValueError(f"W must be ({L}, {L}), got {W.shape}")


def path_energy(unary, W, labels) -> float:
    """Discrete energy of an integer labeling."""
    unary, W = np.asarray(unary, dtype=np.float64), np.asarray(W, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    _check_tables(unary, W)
    if y.shape != (unary.shape[0],):
        raise ValueError(f"labeling length {y.shape} does not match {unary.shape[0]} positions")
    local = unary[np.arange(len(y)), y].sum()
    trans = W[y[:-1], y[1:]].sum()
    return -float(local + trans)


def relaxed_energy(unary, W, Y) -> Tensor:
    """Energy of a sequence of (relaxed) label vectors ``Y`` (n x L); differentiable."""
    unary, W, Y = as_tensor(unary), as_tensor(W), as_tensor(Y)
    if Y.shape != unary.shape:
        raise ValueError(f"labeling shape {Y.shape} does not match unary {unary.shape}")
    score = tsum(mul(Y, unary))
    if Y.shape[0] > 1:
        score = score + tsum(mul(matmul(Y[:-1], W), Y[1:]))
    return neg(score)


def gold_energy(unary, W, labels) -> Tensor:
    """Differentiable discrete energy (gathers instead of one-hot products)."""
    unary, W = as_tensor(unary), as_tensor(W)
    y = np.asarray(labels, dtype=np.int64)
    if y.shape != (unary.shape[0],):
        raise ValueError("labeling length does not match unary table")
    score = tsum(unary[np.arange(len(y)), y])
    if len(y) > 1:
        score = score + tsum(W[y[:-1], y[1:]])
    return neg(score)


def energy(unary, W, y):
    """Energy of an integer labeling (float) or of a relaxed labeling.

    Relaxed input returns a :class:`Tensor` when any argument is a Tensor,
    a float otherwise.
    """
    if not isinstance(y, Tensor):
        arr = np.asarray(y)
        if arr.ndim == 1 and np.issubdtype(arr.dtype, np.integer):
            return path_energy(unary.data if isinstance(unary, Tensor) else unary,
                               W.data if isinstance(W, Tensor) else W, arr)
    out = relaxed_energy(unary, W, y)
    if any(isinstance(a, Tensor) for a in (unary, W, y)):
        return out
    return out.item()


@numba.njit(cache=True)
def _viterbi_kernel(unary: np.ndarray, W: np.ndarray) -> np.ndarray:
    n, L = unary.shape
    score = unary[0].copy()
    nxt = np.empty(L)
    back = np.zeros((n, L), dtype=np.int64)
    for t in range(1, n):
        for j in range(L):
            best = score[0] + W[0, j]
            arg = 0
            for i in range(1, L):
                v = score[i] + W[i, j]
                if v > best:  # strict: ties keep the lowest index
                    best = v
                    arg = i
            nxt[j] = best + unary[t, j]
            back[t, j] = arg
        score[:] = nxt
    y = np.zeros(n, dtype=np.int64)
    last = 0
    for j in range(1, L):
        if score[j] > score[last]:
            last = j
    y[n - 1] = last
    for t in range(n - 1, 0, -1):
        y[t - 1] = back[t, y[t]]
    return y


def viterbi(unary, W) -> tuple[np.ndarray, float]:
    """Lowest-energy labeling in O(n L^2).

    Ties go to the lowest label index at the final position and at every
    backtrack step.
    """
    unary = np.ascontiguousarray(unary, dtype=np.float64)
    W = np.ascontiguousarray(W, dtype=np.float64)
    _check_tables(unary, W)
    y = _viterbi_kernel(unary, W)
    return y, path_energy(unary, W, y)


def brute_force_decode(unary, W, limit: int = BRUTE_FORCE_LIMIT) -> tuple[np.ndarray, float]:
    """Exhaustive argmin over all ``L**n`` labelings (test oracle).

    Among exactly tied energies it returns the labeling that is smallest when
    compared from the last position backwards, which is the labeling the
    Viterbi backtrack produces.
    """
    unary, W = np.asarray(unary, dtype=np.float64), np.asarray(W, dtype=np.float64)
    _check_tables(unary, W)
    n, L = unary.shape
    if L**n > limit:
        raise InstanceTooLarge(f"{L}^{n} labelings exceeds the limit of {limit}")
    best_e, best_y = np.inf, None
    chunk = 1 << 16
    radix = L ** np.arange(n - 1, -1, -1)
    for start in range(0, L**n, chunk):
        codes = np.arange(start, min(start + chunk, L**n))
        Y = (codes[:, None] // radix) % L  # forward-lexicographic enumeration
        e = -(unary[np.arange(n), Y].sum(axis=1) + W[Y[:, :-1], Y[:, 1:]].sum(axis=1))
        m = e.min()
        if m > best_e:
            continue
        cands = Y[e == m]
        if m == best_e:
            cands = np.vstack([cands, best_y[None, :]])
        # lexsort's last key is primary: compare from the last position backwards
        best_y = cands[np.lexsort(tuple(cands.T))[0]]
        best_e = m
    return best_y.astype(np.int64), path_energy(unary, W, best_y)


def log_partition(unary, W) -> Tensor:
    """``log sum_y exp(-E(y))`` by the forward recursion; differentiable."""
    unary, W = as_tensor(unary), as_tensor(W)
    _check_tables(unary.data, W.data)
    n, L = unary.shape
    alpha = unary[0]
    for t in range(1, n):
        alpha = logsumexp(alpha.reshape(L, 1) + W, axis=0) + unary[t]
    return logsumexp(alpha, axis=0)
