"""Shipped test inputs: fixed Hermite coefficient lists and tree kernels."""

from __future__ import annotations

import json
from importlib import resources

import numpy as np


def _load(name: str) -> dict:
    return json.loads(resources.files(__name__).joinpath(name).read_text(encoding="utf-8"))


def load_spectral_test_functions() -> dict:
    """``{name: SpectralFunction}`` for the shipped degree-20 test functions."""
    from ..ou_spectral import SpectralFunction

    raw = _load("spectral_test_functions.json")
    out = {}
    for item in raw["functions"]:
        c = np.array([complex(re, im) for re, im in item["coefficients"]])
        out[item["name"]] = SpectralFunction(c)
    return out


def load_tree_kernels(j_max: int | None = None) -> dict:
    """``{name: RadialTreeKernel}`` for the shipped tree kernels."""
    from ..config import TREE_JMAX
    from ..tree_analysis import kernel_from_spec

    raw = _load("tree_kernels.json")
    return {item["name"]: kernel_from_spec(item, j_max=j_max or TREE_JMAX)
            for item in raw["kernels"]}
