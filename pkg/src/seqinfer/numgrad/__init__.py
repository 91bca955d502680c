"""Minimal reverse-mode autodiff engine and neural layers."""
from .gradcheck import grad_check
from .nn import (
    BLSTM,
    LSTM,
    CharCNN,
    Linear,
    Module,
    StackedBLSTM,
    blstm_encode,
    conv_window,
    dropout,
    lstm_cell,
    uniform_param,
)
from .optim import SGD, OptimizerState, sgd_momentum_step
from .tensor import *  # noqa: F401,F403
from .tensor import __all__ as _tensor_all

__all__ = [
    "grad_check",
    "BLSTM",
    "LSTM",
    "CharCNN",
    "Linear",
    "Module",
    "StackedBLSTM",
    "blstm_encode",
    "conv_window",
    "dropout",
    "lstm_cell",
    "uniform_param",
    "SGD",
    "OptimizerState",
    "sgd_momentum_step",
    *_tensor_all,
]
