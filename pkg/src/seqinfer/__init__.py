"""Exact and approximate inference for neural linear-chain CRFs."""

__version__ = "0.1.0"
