"""NumPy fallback for the hashing hot loops.

The hash family is a keyed counter-mode PRF built on the murmur3 64-bit
finalizer: the function for datapoint j of cluster t evaluated at entry k is

    fmix64(dp_key(seed, t, j) + (k + 1) * ENTRY_C)  >>  (64 - bits)

with per-datapoint keys derived by two more fmix64 rounds.  Encoder and
decoder regenerate hash values from (seed, t, j, k) alone, so nothing beyond
the b-bit symbols is ever stored or transmitted.  The compiled extension in
``_kernels.pyx`` implements the same arithmetic; both backends are exact
uint64 computations and must agree bit for bit.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"

_M64 = (1 << 64) - 1

# fmix64 multipliers (murmur3) and the per-level key offsets.
_FMIX_C1 = 0xFF51AFD7ED558CCD
_FMIX_C2 = 0xC4CEB9FE1A85EC53
CLUSTER_C = 0x9E3779B97F4A7C15
DATAPOINT_C = 0xBF58476D1CE4E5B9
ENTRY_C = 0x94D049BB133111EB


def fmix64(x: int) -> int:
    """murmur3 64-bit finalizer on plain Python ints."""
    x &= _M64
    x ^= x >> 33
    x = (x * _FMIX_C1) & _M64
    x ^= x >> 33
    x = (x * _FMIX_C2) & _M64
    x ^= x >> 33
    return x


def cluster_key(seed: int, cluster_id: int) -> int:
    return fmix64((seed & _M64) ^ (((cluster_id + 1) * CLUSTER_C) & _M64))


def datapoint_key(seed: int, cluster_id: int, index: int) -> int:
    ck = cluster_key(seed, cluster_id)
    return fmix64(ck ^ (((index + 1) * DATAPOINT_C) & _M64))


def hash_symbol(seed: int, cluster_id: int, index: int, entry: int, bits: int) -> int:
    """Scalar h^{t,j}(k); the reference for both vectorized backends."""
    dk = datapoint_key(seed, cluster_id, index)
    return fmix64((dk + ((entry + 1) * ENTRY_C)) & _M64) >> (64 - bits)


def _fmix64_arr(x: np.ndarray) -> np.ndarray:
    # In-place on the passed uint64 array (callers hand over a fresh buffer).
    x ^= x >> np.uint64(33)
    x *= np.uint64(_FMIX_C1)
    x ^= x >> np.uint64(33)
    x *= np.uint64(_FMIX_C2)
    x ^= x >> np.uint64(33)
    return x


def _datapoint_keys(seed: int, cluster_id: int, indices: np.ndarray) -> np.ndarray:
    ck = np.uint64(cluster_key(seed, cluster_id))
    keys = (indices.astype(np.uint64) + np.uint64(1)) * np.uint64(DATAPOINT_C)
    keys ^= ck
    return _fmix64_arr(keys)


def encode_many(
    seed: int,
    cluster_id: int,
    indices: np.ndarray,
    datapoints: np.ndarray,
    bits: int,
) -> np.ndarray:
    """Hash each datapoint with its own function; returns uint32 symbols."""
    keys = _datapoint_keys(seed, cluster_id, indices)
    keys += (datapoints.astype(np.uint64) + np.uint64(1)) * np.uint64(ENTRY_C)
    out = _fmix64_arr(keys)
    out >>= np.uint64(64 - bits)
    return out.astype(np.uint32)


def decode_counts(
    seed: int,
    cluster_id: int,
    indices: np.ndarray,
    symbols: np.ndarray,
    dim: int,
    bits: int,
) -> np.ndarray:
    """Count, per entry k, the datapoints whose hash at k matches their symbol."""
    keys = _datapoint_keys(seed, cluster_id, indices)
    sym = symbols.astype(np.uint64)
    shift = np.uint64(64 - bits)
    counts = np.empty(dim, dtype=np.int64)
    buf = np.empty_like(keys)
    for k in range(dim):
        np.add(keys, np.uint64(((k + 1) * ENTRY_C) & _M64), out=buf)
        _fmix64_arr(buf)
        buf >>= shift
        counts[k] = np.count_nonzero(buf == sym)
    return counts


def hash_row(seed: int, cluster_id: int, index: int, dim: int, bits: int) -> np.ndarray:
    """All d hash values of one datapoint's function; used by tests."""
    dk = np.uint64(datapoint_key(seed, cluster_id, index))
    ks = (np.arange(1, dim + 1, dtype=np.uint64)) * np.uint64(ENTRY_C)
    ks += dk
    out = _fmix64_arr(ks)
    out >>= np.uint64(64 - bits)
    return out.astype(np.uint32)
