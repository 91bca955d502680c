"""Neural linear-chain CRF: energy, exact inference, likelihood training."""
from .inference import (
    BRUTE_FORCE_LIMIT,
    InstanceTooLarge,
    brute_force_decode,
    energy,
    gold_energy,
    log_partition,
    path_energy,
    relaxed_energy,
    viterbi,
)
from .model import (
    CrfConfig,
    CrfTrainConfig,
    EnergyModel,
    FrozenEnergy,
    crf_nll,
    evaluate_labels,
    train_crf,
    unary_potentials,
)

__all__ = [
    "BRUTE_FORCE_LIMIT",
    "InstanceTooLarge",
    "brute_force_decode",
    "energy",
    "gold_energy",
    "log_partition",
    "path_energy",
    "relaxed_energy",
    "viterbi",
    "CrfConfig",
    "CrfTrainConfig",
    "EnergyModel",
    "FrozenEnergy",
    "crf_nll",
    "evaluate_labels",
    "train_crf",
    "unary_potentials",
]
