# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hashing kernels.

Same keyed counter-mode PRF as ``_kernels_py`` (murmur3 fmix64 over
(seed, cluster, datapoint, entry)); the decode loop is the package hot spot
at Theta(n * d) hash evaluations per cluster.
"""

import numpy as np

cimport numpy as cnp
from libc.stdint cimport int64_t, uint32_t, uint64_t

BACKEND = "compiled"

cdef uint64_t FMIX_C1 = 0xFF51AFD7ED558CCDULL
cdef uint64_t FMIX_C2 = 0xC4CEB9FE1A85EC53ULL
cdef uint64_t CLUSTER_C = 0x9E3779B97F4A7C15ULL
cdef uint64_t DATAPOINT_C = 0xBF58476D1CE4E5B9ULL
cdef uint64_t ENTRY_C = 0x94D049BB133111EBULL


cdef inline uint64_t _fmix64(uint64_t x) nogil:
    x ^= x >> 33
    x *= FMIX_C1
    x ^= x >> 33
    x *= FMIX_C2
    x ^= x >> 33
    return x


cdef inline uint64_t _cluster_key(uint64_t seed, uint64_t cluster_id) nogil:
    return _fmix64(seed ^ ((cluster_id + 1) * CLUSTER_C))


def hash_symbol(seed, cluster_id, index, entry, bits):
    cdef uint64_t dk = _fmix64(
        _cluster_key(<uint64_t> seed, <uint64_t> cluster_id)
        ^ ((<uint64_t> index + 1) * DATAPOINT_C)
    )
    return int(_fmix64(dk + ((<uint64_t> entry + 1) * ENTRY_C)) >> (64 - <int> bits))


def encode_many(seed, cluster_id, indices, datapoints, bits):
    cdef uint64_t ck = _cluster_key(<uint64_t> seed, <uint64_t> cluster_id)
    cdef uint64_t[::1] idx = np.ascontiguousarray(indices, dtype=np.uint64)
    cdef int64_t[::1] data = np.ascontiguousarray(datapoints, dtype=np.int64)
    cdef Py_ssize_t n = idx.shape[0]
    out_arr = np.empty(n, dtype=np.uint32)
    cdef uint32_t[::1] out = out_arr
    cdef int shift = 64 - <int> bits
    cdef Py_ssize_t j
    cdef uint64_t dk
    with nogil:
        for j in range(n):
            dk = _fmix64(ck ^ ((idx[j] + 1) * DATAPOINT_C))
            out[j] = <uint32_t> (_fmix64(dk + ((<uint64_t> data[j] + 1) * ENTRY_C)) >> shift)
    return out_arr


def decode_counts(seed, cluster_id, indices, symbols, dim, bits):
    cdef uint64_t ck = _cluster_key(<uint64_t> seed, <uint64_t> cluster_id)
    cdef uint64_t[::1] idx = np.ascontiguousarray(indices, dtype=np.uint64)
    cdef uint32_t[::1] sym = np.ascontiguousarray(symbols, dtype=np.uint32)
    cdef Py_ssize_t n = sym.shape[0]
    cdef Py_ssize_t d = dim
    counts_arr = np.zeros(d, dtype=np.int64)
    cdef int64_t[::1] counts = counts_arr
    keys_arr = np.empty(n, dtype=np.uint64)
    cdef uint64_t[::1] keys = keys_arr
    kmul_arr = np.empty(d, dtype=np.uint64)
    cdef uint64_t[::1] kmul = kmul_arr
    cdef int shift = 64 - <int> bits
    cdef Py_ssize_t j, k
    cdef uint64_t key, km
    cdef uint32_t y
    cdef int64_t acc
    with nogil:
        for j in range(n):
            keys[j] = _fmix64(ck ^ ((idx[j] + 1) * DATAPOINT_C))
        for k in range(d):
            kmul[k] = (<uint64_t> k + 1) * ENTRY_C
        if d <= 4096:
            # counts and kmul stay cache-resident; datapoints streamed once
            for j in range(n):
                key = keys[j]
                y = sym[j]
                for k in range(d):
                    counts[k] += (<uint32_t> (_fmix64(key + kmul[k]) >> shift)) == y
        else:
            # large alphabets: stream the (smaller) datapoint arrays per entry
            for k in range(d):
                km = kmul[k]
                acc = 0
                for j in range(n):
                    acc += (<uint32_t> (_fmix64(keys[j] + km) >> shift)) == sym[j]
                counts[k] = acc
    return counts_arr


def hash_row(seed, cluster_id, index, dim, bits):
    cdef uint64_t dk = _fmix64(
        _cluster_key(<uint64_t> seed, <uint64_t> cluster_id)
        ^ ((<uint64_t> index + 1) * DATAPOINT_C)
    )
    out_arr = np.empty(dim, dtype=np.uint32)
    cdef uint32_t[::1] out = out_arr
    cdef int shift = 64 - <int> bits
    cdef Py_ssize_t k, d = dim
    with nogil:
        for k in range(d):
            out[k] = <uint32_t> (_fmix64(dk + ((<uint64_t> k + 1) * ENTRY_C)) >> shift)
    return out_arr
