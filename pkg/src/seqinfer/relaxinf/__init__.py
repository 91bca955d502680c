"""Test-time optimization over relaxed output spaces."""
from .gd import (
    LR_GRID,
    N_GRID,
    GdConfig,
    GdDivergence,
    GdResult,
    TuneResult,
    gd_infer,
    gd_minimize,
    gd_oracle_tune,
    initial_logits,
    instance_metric,
    relaxed_energy_and_grad,
)
from .refine import RefineConfig, RefineResult, instance_tailor, tune_on_dev, warm_start_gd

__all__ = [
    "LR_GRID",
    "N_GRID",
    "GdConfig",
    "GdDivergence",
    "GdResult",
    "TuneResult",
    "gd_infer",
    "gd_minimize",
    "gd_oracle_tune",
    "initial_logits",
    "instance_metric",
    "relaxed_energy_and_grad",
    "RefineConfig",
    "RefineResult",
    "instance_tailor",
    "tune_on_dev",
    "warm_start_gd",
]
