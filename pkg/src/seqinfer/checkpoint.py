"""Versioned JSON checkpoint container.

Layout::

    {
      "format": "seqinfer-checkpoint",
      "version": 1,
      "kind": "crf" | "infnet" | "lm",
      "family": optional model family tag,
      "config": {...},            # everything needed to rebuild the module
      "meta": {...},              # vocabularies and other non-array data
      "params": {name: {"shape": [...], "data": [flat float64 values]}}
    }

Floats go through ``repr`` so a reload is bit-exact.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .numgrad import Module

FORMAT = "seqinfer-checkpoint"
VERSION = 1


class CheckpointError(ValueError):
    pass


def module_params_json(module: Module) -> dict:
    return {
        name: {"shape": list(p.shape), "data": p.data.reshape(-1).tolist()}
        for name, p in module.named_parameters()
    }


def params_from_json(doc: dict) -> dict[str, np.ndarray]:
    return {name: np.array(v["data"], dtype=np.float64).reshape(v["shape"]) for name, v in doc.items()}


def save(path, kind: str, module: Module, config: dict, meta: dict, family: str | None = None) -> None:
    doc = {
        "format": FORMAT,
        "version": VERSION,
        "kind": kind,
        "family": family,
        "config": config,
        "meta": meta,
        "params": module_params_json(module),
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def read(path, kind: str | None = None) -> dict:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    doc = json.loads(path.read_text(encoding="utf-8"))
    if doc.get("format") != FORMAT:
        raise CheckpointError(f"{path}: not a seqinfer checkpoint")
    if doc.get("version") != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {doc.get('version')}")
    if kind is not None and doc.get("kind") != kind:
        raise CheckpointError(f"{path}: expected a {kind} checkpoint, found {doc.get('kind')}")
    return doc
