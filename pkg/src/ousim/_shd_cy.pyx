# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled similarity-Hamming-distance kernel.

Columns are packed into 64-bit words so each pairwise distance is a
handful of XOR+popcount operations instead of an m-element loop.
"""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, uint8_t, int64_t
from libc.stdlib cimport malloc, free

cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil


def pairwise_shd(const uint8_t[:, ::1] bits):
    """All-pairs count of differing rows between columns of a 0/1 matrix.

    bits: (m, n) array with values in {0, 1}. Returns (n, n) int64.
    """
    cdef Py_ssize_t m = bits.shape[0]
    cdef Py_ssize_t n = bits.shape[1]
    cdef Py_ssize_t words = (m + 63) // 64
    cdef Py_ssize_t i, j, r, wi
    cdef uint64_t* packed
    cdef int64_t d

    out_arr = np.zeros((n, n), dtype=np.int64)
    cdef int64_t[:, ::1] out = out_arr
    if n == 0:
        return out_arr

    packed = <uint64_t*> malloc(n * words * sizeof(uint64_t))
    if packed == NULL:
        raise MemoryError()
    try:
        for i in range(n * words):
            packed[i] = 0
        for r in range(m):
            wi = r >> 6
            for i in range(n):
                if bits[r, i]:
                    packed[i * words + wi] |= (<uint64_t>1) << (r & 63)
        with nogil:
            for i in range(n):
                for j in range(i + 1, n):
                    d = 0
                    for wi in range(words):
                        d += __builtin_popcountll(
                            packed[i * words + wi] ^ packed[j * words + wi])
                    out[i, j] = d
                    out[j, i] = d
    finally:
        free(packed)
    return out_arr
