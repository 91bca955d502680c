"""Inference networks trained to output low-energy labelings directly."""
from .model import (
    FAMILIES,
    BlstmInfNet,
    CnnInfNet,
    InfNet,
    InfNetConfig,
    Seq2SeqInfNet,
    build_infnet,
    discretize,
    infnet_forward,
    table_of,
    token_loss,
)
from .training import (
    LAMBDA_GRID,
    InfNetTrainConfig,
    anneal_weight,
    infnet_loss,
    train_infnet,
    train_local_baseline,
)

__all__ = [
    "FAMILIES",
    "BlstmInfNet",
    "CnnInfNet",
    "InfNet",
    "InfNetConfig",
    "Seq2SeqInfNet",
    "build_infnet",
    "discretize",
    "infnet_forward",
    "table_of",
    "token_loss",
    "LAMBDA_GRID",
    "InfNetTrainConfig",
    "anneal_weight",
    "infnet_loss",
    "train_infnet",
    "train_local_baseline",
]
