"""Neural building blocks composed from the primitive tensor ops."""
from __future__ import annotations

import copy
from typing import Iterator

import numpy as np

from .tensor import (
    ShapeError,
    Tensor,
    add,
    as_tensor,
    concat,
    matmul,
    mul,
    sigmoid,
    stack,
    take,
    tanh,
    tmax,
)

INIT_SCALE = 0.1


def uniform_param(rng: np.random.Generator, shape, scale: float = INIT_SCALE) -> Tensor:
    return Tensor(rng.uniform(-scale, scale, size=shape), requires_grad=True)


class Module:
    """Parameter container.

    Parameters are the :class:`Tensor` attributes of a module and of its
    sub-modules (including lists of sub-modules), in attribute order. Frozen
    tensors (``requires_grad=False``) are still parameters for serialization
    but are skipped by :meth:`trainable_parameters`.
    """

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        for name, value in vars(self).items():
            full = f"{prefix}{name}"
            if isinstance(value, Tensor):
                yield full, value
            elif isinstance(value, Module):
                yield from value.named_parameters(full + ".")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{full}.{i}.")
                    elif isinstance(item, Tensor):
                        yield f"{full}.{i}", item

    def parameters(self) -> list[Tensor]:
        return [p for _, p in self.named_parameters()]

    def trainable_parameters(self) -> list[Tensor]:
        return [p for p in self.parameters() if p.requires_grad]

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        params = dict(self.named_parameters())
        missing = set(params) - set(state)
        extra = set(state) - set(params)
        if missing or extra:
            raise KeyError(f"state mismatch: missing={sorted(missing)} unexpected={sorted(extra)}")
        for name, p in params.items():
            arr = np.asarray(state[name], dtype=np.float64)
            if arr.shape != p.shape:
                raise ShapeError(f"{name}: expected shape {p.shape}, got {arr.shape}")
            p.data = arr.copy()

    def clone(self):
        """Deep copy with fresh parameter buffers and no gradients."""
        other = copy.deepcopy(self)
        other.zero_grad()
        return other


class Linear(Module):
    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator, bias: bool = True):
        self.W = uniform_param(rng, (d_in, d_out))
        self.b = uniform_param(rng, (d_out,)) if bias else None

    def __call__(self, x) -> Tensor:
        out = matmul(x, self.W)
        return out if self.b is None else add(out, self.b)


class LSTM(Module):
    """One-direction LSTM; gate blocks ordered (input, forget, output, candidate)."""

    def __init__(self, d_in: int, hidden: int, rng: np.random.Generator):
        self.d_in = d_in
        self.hidden = hidden
        self.Wx = uniform_param(rng, (d_in, 4 * hidden))
        self.Wh = uniform_param(rng, (hidden, 4 * hidden))
        self.b = uniform_param(rng, (4 * hidden,))

    def initial_state(self) -> tuple[Tensor, Tensor]:
        z = np.zeros(self.hidden)
        return Tensor(z), Tensor(z.copy())

    def run(self, xs: Tensor, reverse: bool = False) -> Tensor:
        """Hidden states for every row of ``xs`` (n x d_in), in input order."""
        xs = as_tensor(xs)
        if xs.ndim != 2 or xs.shape[1] != self.d_in:
            raise ShapeError(f"LSTM expects (n, {self.d_in}) input, got {xs.shape}")
        n = xs.shape[0]
        if n == 0:
            raise ShapeError("empty sequence")
        # input projection hoisted out of the recurrence
        proj = add(matmul(xs, self.Wx), self.b)
        h, c = self.initial_state()
        outs: list[Tensor] = [None] * n  # type: ignore[list-item]
        steps = range(n - 1, -1, -1) if reverse else range(n)
        for t in steps:
            h, c = _lstm_step(proj[t], h, c, self.Wh, self.hidden)
            outs[t] = h
        return stack(outs, axis=0)


def _lstm_step(x_proj: Tensor, h_prev: Tensor, c_prev: Tensor, Wh: Tensor, H: int):
    gates = add(x_proj, matmul(h_prev, Wh))
    sg = sigmoid(gates[: 3 * H])
    g = tanh(gates[3 * H:])
    i, f, o = sg[:H], sg[H: 2 * H], sg[2 * H:]
    c = add(mul(f, c_prev), mul(i, g))
    h = mul(o, tanh(c))
    return h, c


def lstm_cell(x_t, h_prev, c_prev, params: LSTM) -> tuple[Tensor, Tensor]:
    """Single LSTM step: returns ``(h_t, c_t)``."""
    x_t, h_prev, c_prev = as_tensor(x_t), as_tensor(h_prev), as_tensor(c_prev)
    H = params.hidden
    if x_t.shape != (params.d_in,) or h_prev.shape != (H,) or c_prev.shape != (H,):
        raise ShapeError(
            f"lstm_cell: got x{x_t.shape} h{h_prev.shape} c{c_prev.shape}, "
            f"expected x({params.d_in},) h({H},) c({H},)"
        )
    proj = add(matmul(x_t, params.Wx), params.b)
    return _lstm_step(proj, h_prev, c_prev, params.Wh, H)


class BLSTM(Module):
    def __init__(self, d_in: int, hidden: int, rng: np.random.Generator):
        self.hidden = hidden
        self.fwd = LSTM(d_in, hidden, rng)
        self.bwd = LSTM(d_in, hidden, rng)

    @property
    def out_dim(self) -> int:
        return 2 * self.hidden

    def __call__(self, xs) -> Tensor:
        return blstm_encode(xs, self)


def blstm_encode(embeddings, params: BLSTM) -> Tensor:
    """Row t is ``[forward h_t ; backward h_t]``; output is n x 2H."""
    embeddings = as_tensor(embeddings)
    if embeddings.ndim != 2 or embeddings.shape[0] == 0:
        raise ShapeError("blstm_encode needs a non-empty (n, d) sequence")
    fwd = params.fwd.run(embeddings)
    bwd = params.bwd.run(embeddings, reverse=True)
    return concat([fwd, bwd], axis=1)


class StackedBLSTM(Module):
    """BLSTM layers with dropout between layers."""

    def __init__(self, d_in: int, hidden: int, layers: int, rng: np.random.Generator):
        if layers < 1:
            raise ValueError("layers must be >= 1")
        self.layers = [BLSTM(d_in if k == 0 else 2 * hidden, hidden, rng) for k in range(layers)]

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    def __call__(self, xs, dropout_rate: float = 0.0, train: bool = False,
                 rng: np.random.Generator | None = None) -> Tensor:
        h = as_tensor(xs)
        for k, layer in enumerate(self.layers):
            if k > 0:
                h = dropout(h, dropout_rate, train, rng)
            h = layer(h)
        return h


def conv_window(embeddings, half_width: int, W, b, pad, g=tanh) -> Tensor:
    """Window feature map ``g(W [v_{t-w}; ...; v_{t+w}] + b)`` for every t.

    Out-of-range neighbours read the ``pad`` vector. ``W`` has shape
    ((2w+1)·d, H).
    """
    embeddings, W, b, pad = as_tensor(embeddings), as_tensor(W), as_tensor(b), as_tensor(pad)
    if embeddings.ndim != 2:
        raise ShapeError("conv_window expects (n, d) embeddings")
    n, d = embeddings.shape
    if W.shape[0] != (2 * half_width + 1) * d or pad.shape != (d,):
        raise ShapeError(f"conv_window: W {W.shape} / pad {pad.shape} do not match d={d}, w={half_width}")
    if half_width == 0:
        windows = embeddings
    else:
        pad_rows = stack([pad] * half_width, axis=0)
        padded = concat([pad_rows, embeddings, pad_rows], axis=0)
        windows = concat([padded[k: k + n] for k in range(2 * half_width + 1)], axis=1)
    return g(add(matmul(windows, W), b))


def dropout(x, rate: float, train: bool, rng: np.random.Generator | None = None) -> Tensor:
    """Inverted dropout; the exact identity in eval mode or at rate 0."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    x = as_tensor(x)
    if not train or rate == 0.0:
        return x
    if rng is None:
        raise ValueError("training-mode dropout needs a seeded rng")
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return mul(x, keep)


class CharCNN(Module):
    """Character embeddings -> width-k convolution -> max over positions."""

    def __init__(self, n_chars: int, rng: np.random.Generator, char_dim: int = 30,
                 filters: int = 30, width: int = 3):
        if width % 2 != 1:
            raise ValueError("char filter width must be odd")
        self.width = width
        self.char_dim = char_dim
        self.filters = filters
        self.emb = uniform_param(rng, (n_chars, char_dim))
        self.pad = uniform_param(rng, (char_dim,))
        self.W = uniform_param(rng, (width * char_dim, filters))
        self.b = uniform_param(rng, (filters,))

    def __call__(self, char_ids: list[np.ndarray], dropout_rate: float = 0.0,
                 train: bool = False, rng: np.random.Generator | None = None) -> Tensor:
        """One ``filters``-dim vector per word; ``char_ids`` holds one index array per word."""
        n = len(char_ids)
        max_len = max(len(c) for c in char_ids)
        half = self.width // 2
        # index n_chars is reserved for padding by appending self.pad to the table
        pad_id = self.emb.shape[0]
        ids = np.full((n, max_len + 2 * half), pad_id, dtype=np.int64)
        valid = np.full((n, max_len), -1e9)
        for k, c in enumerate(char_ids):
            ids[k, half: half + len(c)] = c
            valid[k, : len(c)] = 0.0
        table = concat([self.emb, stack([self.pad], axis=0)], axis=0)
        chars = take(table, ids)  # (n, max_len + 2h, char_dim)
        chars = dropout(chars, dropout_rate, train, rng)
        windows = concat([chars[:, k: k + max_len, :] for k in range(self.width)], axis=2)
        flat = windows.reshape(n * max_len, self.width * self.char_dim)
        feats = tanh(add(matmul(flat, self.W), self.b)).reshape(n, max_len, self.filters)
        # padding positions are pushed far below any tanh output before pooling
        return tmax(add(feats, valid[:, :, None]), axis=1)
