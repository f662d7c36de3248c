"""Pure-Python implementation of the sweep kernel (reference and fallback).

Mirrors ``_ckernels.pyx`` line for line; see ``kernels.py`` for the contract.
"""

from __future__ import annotations

import numpy as np

NUM_KEYS = 256 * 5 * 2


def tuple_key(ranks, words, masks, parity, n):
    """Class key of one target tuple.

    ``(partition_code * 5 + gf2_rank) * 2 + consistent``; rank and
    consistency are only filled in when all triples are distinct.
    """
    k = len(ranks)
    labels = [0] * k
    nblocks = 0
    code = 0
    for i in range(k):
        for j in range(i):
            if ranks[j] == ranks[i]:
                labels[i] = labels[j]
                break
        else:
            labels[i] = nblocks
            nblocks += 1
        code |= labels[i] << (2 * i)
    rank = 0
    consistent = 0
    if nblocks == k:
        consistent = 1
        rhs_bit = 1 << n
        pivots = []
        for i in range(k):
            row = masks[ranks[i]]
            if (parity + bin(words[i]).count("1")) & 1:
                row |= rhs_bit
            for piv, low in pivots:
                if row & low:
                    row ^= piv
            body = row & (rhs_bit - 1)
            if body == 0:
                if row & rhs_bit:
                    consistent = 0
            else:
                pivots.append((row, body & -body))
        rank = len(pivots)
    return (code * 5 + rank) * 2 + consistent


def classify_tuples(masks, k: int, num_types: int, parity: int, n: int, lo: int, hi: int):
    masks = [int(x) for x in masks]
    counts = np.zeros(NUM_KEYS, dtype=np.int64)
    first = np.full(NUM_KEYS, -1, dtype=np.int64)
    last = np.full(NUM_KEYS, -1, dtype=np.int64)
    M = num_types
    stride = M ** (k - 1)
    idx = [lo] + [0] * (k - 1)
    flat = lo * stride
    end = hi * stride
    while flat < end:
        ranks = [t >> 3 for t in idx]
        words = [t & 7 for t in idx]
        key = tuple_key(ranks, words, masks, parity, n)
        counts[key] += 1
        if first[key] < 0:
            first[key] = flat
        last[key] = flat
        flat += 1
        j = k - 1
        while j >= 0:
            idx[j] += 1
            if idx[j] < M or j == 0:
                break
            idx[j] = 0
            j -= 1
    return counts, first, last
