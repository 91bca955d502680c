"""Speed, accuracy, energy and search-error measurement."""
from .harness import (
    METHOD_KINDS,
    BenchConfig,
    BenchConfigError,
    BenchReport,
    InferenceOutcome,
    MethodRow,
    MethodSpec,
    correlate_search_error,
    make_runner,
    parse_method,
    run_bench,
)
from .lm import LmConfig, LstmLm, build_vocab, lm_perplexity, train_lm
from .stats import SearchErrorViolation, check_search_error, search_error, spearman_rho

__all__ = [
    "METHOD_KINDS",
    "BenchConfig",
    "BenchConfigError",
    "BenchReport",
    "InferenceOutcome",
    "MethodRow",
    "MethodSpec",
    "correlate_search_error",
    "make_runner",
    "parse_method",
    "run_bench",
    "LmConfig",
    "LstmLm",
    "build_vocab",
    "lm_perplexity",
    "train_lm",
    "SearchErrorViolation",
    "check_search_error",
    "search_error",
    "spearman_rho",
]
