"""Deterministic 64-bit seed derivation.

Every random stream in the package (perturbations, categorical sampling,
hash functions) is keyed by a seed derived from one master seed and a short
token path, e.g. ``derive_seed(master, "run", 3, "gen", 7)``.  Derivation
mixes each token into the running state with the same fmix64 finalizer the
hash kernels use, so replays are exact across platforms and backends.
"""

from __future__ import annotations

from ._kernels_py import fmix64

_M64 = (1 << 64) - 1
_INT_C = 0x9E3779B97F4A7C15
_STR_SEED = 0xCBF29CE484222325  # FNV-1a offset basis
_STR_PRIME = 0x100000001B3


def _fold_token(token: int | str) -> int:
    if isinstance(token, str):
        h = _STR_SEED
        for byte in token.encode("utf-8"):
            h = ((h ^ byte) * _STR_PRIME) & _M64
        return h
    return ((int(token) + 1) * _INT_C) & _M64


def derive_seed(master_seed: int, *tokens: int | str) -> int:
    state = fmix64(int(master_seed) & _M64)
    for token in tokens:
        state = fmix64(state ^ _fold_token(token))
    return state
