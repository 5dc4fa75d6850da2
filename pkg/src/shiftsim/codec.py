"""b-bit encoding of datapoints and server-side decoding into hashed estimates.

Each datapoint j of cluster t is pushed through its own uniform hash
function h^{t,j}: [d] -> [2^b] and only the b-bit symbol is kept.  The
decoder recounts, for every entry k, how many datapoints hashed k onto
their transmitted symbol; N_k / n is the hashed frequency estimate, whose
mean is ((2^b - 1) p + 1) / 2^b.  Hash values are regenerated on demand
from the shared seed (see ``_kernels_py`` for the keyed PRF), so decode
costs Theta(n * d) evaluations and runs on the compiled kernel when built.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _backend
from .model import (
    MAX_BITS,
    Distribution,
    DimensionTooSmallError,
    HashedEstimate,
    ShiftSimError,
)


class SymbolOutOfRangeError(ShiftSimError):
    pass


class EmptyClusterError(ShiftSimError):
    pass


@dataclass(frozen=True)
class HashKey:
    """Identifies one datapoint's hash function h^{t,j}."""

    master_seed: int
    cluster_id: int
    datapoint_index: int

    def symbol(self, entry: int, bits: int) -> int:
        _check_bits(bits)
        return int(
            _backend.active().hash_symbol(
                self.master_seed, self.cluster_id, self.datapoint_index, entry, bits
            )
        )


@dataclass(frozen=True)
class EncodedMessage:
    symbol: int
    datapoint_index: int


def _check_bits(bits: int) -> None:
    if not 1 <= int(bits) <= MAX_BITS:
        raise ShiftSimError(f"bits must be in [1, {MAX_BITS}]")


def encode(datapoint: int, key: HashKey, bits: int) -> EncodedMessage:
    """Encode a single one-hot index as its b-bit hash symbol."""
    _check_bits(bits)
    if datapoint < 0:
        raise SymbolOutOfRangeError(f"datapoint index {datapoint} is negative")
    return EncodedMessage(symbol=key.symbol(datapoint, bits), datapoint_index=key.datapoint_index)


def encode_cluster(
    datapoints: np.ndarray,
    cluster_id: int,
    master_seed: int,
    bits: int,
    indices: np.ndarray | None = None,
    dim: int | None = None,
) -> np.ndarray:
    """Encode a whole cluster; returns the uint32 symbol per datapoint.

    ``indices`` defaults to positions 0..n-1 and only needs to be passed when
    replaying datapoints whose indices are not contiguous.  ``dim``, when
    given, bounds-checks the one-hot indices.
    """
    _check_bits(bits)
    data = np.ascontiguousarray(datapoints, dtype=np.int64)
    if data.size == 0:
        raise EmptyClusterError("cannot encode an empty cluster")
    if np.any(data < 0) or (dim is not None and np.any(data >= dim)):
        raise SymbolOutOfRangeError("datapoint indices must lie in [0, dim)")
    if indices is None:
        indices = np.arange(data.size, dtype=np.uint64)
    return _backend.active().encode_many(master_seed, cluster_id, indices, data, bits)


def decode_cluster(
    messages,
    cluster_id: int,
    master_seed: int,
    bits: int,
    dim: int,
) -> HashedEstimate:
    """Decode one cluster's messages into its hashed frequency estimate.

    ``messages`` is either a uint32 symbol array (datapoint index = position)
    or a sequence of :class:`EncodedMessage`.  The result is a pure function
    of (messages, seed, ids); hash values are recomputed, never stored.
    """
    _check_bits(bits)
    if dim < 2:
        raise DimensionTooSmallError("dim must be at least 2")
    symbols, indices = _as_symbol_arrays(messages)
    if symbols.size == 0:
        raise EmptyClusterError("cannot decode an empty cluster")
    if np.any(symbols >> np.uint32(bits)):
        raise SymbolOutOfRangeError(f"messages contain symbols >= 2^{bits}")
    counts = _backend.active().decode_counts(master_seed, cluster_id, indices, symbols, dim, bits)
    return HashedEstimate(
        values=counts / symbols.size,
        sample_size=int(symbols.size),
        bits=int(bits),
        cluster_id=int(cluster_id),
        seed=int(master_seed),
    )


def _as_symbol_arrays(messages) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(messages, np.ndarray):
        symbols = np.ascontiguousarray(messages, dtype=np.uint32)
        return symbols, np.arange(symbols.size, dtype=np.uint64)
    seq: Sequence[EncodedMessage] = list(messages)
    symbols = np.fromiter((m.symbol for m in seq), dtype=np.uint32, count=len(seq))
    indices = np.fromiter((m.datapoint_index for m in seq), dtype=np.uint64, count=len(seq))
    return symbols, indices


def hashed_mean(p: Distribution, bits: int) -> np.ndarray:
    """Exact mean of the hashed estimate: ((2^b - 1) p + 1) / 2^b."""
    _check_bits(bits)
    m = float(2**bits)
    return ((m - 1.0) * p.probs + 1.0) / m


def debias(values: np.ndarray, bits: int) -> np.ndarray:
    """Invert the hashing bias entry-wise and project onto [0, 1]."""
    _check_bits(bits)
    m = float(2**bits)
    raw = (m * np.asarray(values, dtype=np.float64) - 1.0) / (m - 1.0)
    return np.clip(raw, 0.0, 1.0)


# Binary message dump: 16-byte header (magic "SHFT", version u16, bits u8,
# 9 reserved bytes), then little-endian records of (u32 index, u32 symbol).
_MAGIC = b"SHFT"
_VERSION = 1
_HEADER = struct.Struct("<4sHB9x")
_RECORD_DTYPE = np.dtype([("index", "<u4"), ("symbol", "<u4")])


def write_messages(path, symbols: np.ndarray, bits: int, indices: np.ndarray | None = None) -> None:
    _check_bits(bits)
    symbols = np.asarray(symbols, dtype=np.uint32)
    if indices is None:
        indices = np.arange(symbols.size, dtype=np.uint32)
    records = np.empty(symbols.size, dtype=_RECORD_DTYPE)
    records["index"] = indices
    records["symbol"] = symbols
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, _VERSION, bits))
        records.tofile(fh)


def read_messages(path) -> tuple[np.ndarray, np.ndarray, int]:
    """Read a message dump; returns (symbols, indices, bits)."""
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise ShiftSimError(f"truncated message file {path}")
        magic, version, bits = _HEADER.unpack(header)
        if magic != _MAGIC:
            raise ShiftSimError(f"bad magic in {path}")
        if version != _VERSION:
            raise ShiftSimError(f"unsupported message file version {version}")
        records = np.fromfile(fh, dtype=_RECORD_DTYPE)
    return records["symbol"].copy(), records["index"].copy(), int(bits)
