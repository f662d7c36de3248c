# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled sweep kernel; same contract as ``_kernels_py.classify_tuples``.

Variable masks are packed in 63 bits, bit 63 holds the right-hand side, so
``n <= 63``.
"""

import numpy as np
cimport numpy as cnp

ctypedef unsigned long long u64

cdef enum:
    MAXK = 4
NUM_KEYS = 256 * 5 * 2


cdef inline int popcount3(long long w) nogil:
    return (w & 1) + ((w >> 1) & 1) + ((w >> 2) & 1)


cdef inline int tuple_key(long long* ranks, long long* words, const u64* masks,
                          int k, int parity) nogil:
    cdef int labels[MAXK]
    cdef u64 piv[MAXK]
    cdef u64 pivlow[MAXK]
    cdef int i, j, nblocks = 0, code = 0, rank = 0, consistent = 0
    cdef u64 row, body
    cdef u64 rhs_bit = (<u64>1) << 63
    for i in range(k):
        labels[i] = -1
        for j in range(i):
            if ranks[j] == ranks[i]:
                labels[i] = labels[j]
                break
        if labels[i] < 0:
            labels[i] = nblocks
            nblocks += 1
        code |= labels[i] << (2 * i)
    if nblocks == k:
        consistent = 1
        for i in range(k):
            row = masks[ranks[i]]
            if (parity + popcount3(words[i])) & 1:
                row |= rhs_bit
            for j in range(rank):
                if row & pivlow[j]:
                    row ^= piv[j]
            body = row & (rhs_bit - 1)
            if body == 0:
                if row & rhs_bit:
                    consistent = 0
            else:
                piv[rank] = row
                pivlow[rank] = body & (~body + 1)
                rank += 1
    return (code * 5 + rank) * 2 + consistent


def classify_tuples(masks, int k, long long num_types, int parity, int n,
                    long long lo, long long hi):
    if n > 63:
        raise ValueError("compiled kernel supports n <= 63")
    if k < 1 or k > MAXK:
        raise ValueError("k must be in [1, 4]")
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] m_arr = np.ascontiguousarray(masks, dtype=np.uint64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] counts = np.zeros(NUM_KEYS, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] first = np.full(NUM_KEYS, -1, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] last = np.full(NUM_KEYS, -1, dtype=np.int64)
    cdef const u64* mp = <const u64*> m_arr.data
    cdef long long* cp = <long long*> counts.data
    cdef long long* fp = <long long*> first.data
    cdef long long* lp = <long long*> last.data
    cdef long long idx[MAXK]
    cdef long long ranks[MAXK]
    cdef long long words[MAXK]
    cdef long long stride = 1, flat, end
    cdef int i, j, key
    for i in range(k - 1):
        stride *= num_types
    idx[0] = lo
    for i in range(1, k):
        idx[i] = 0
    flat = lo * stride
    end = hi * stride
    with nogil:
        while flat < end:
            for i in range(k):
                ranks[i] = idx[i] >> 3
                words[i] = idx[i] & 7
            key = tuple_key(ranks, words, mp, k, parity)
            cp[key] += 1
            if fp[key] < 0:
                fp[key] = flat
            lp[key] = flat
            flat += 1
            j = k - 1
            while j >= 0:
                idx[j] += 1
                if idx[j] < num_types or j == 0:
                    break
                idx[j] = 0
                j -= 1
    return counts, first, last
