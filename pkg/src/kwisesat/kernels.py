"""Backend selection for the hot loops.

``classify_tuples(masks, k, num_types, parity, n, lo, hi)`` walks every
target tuple ``(t_0, ..., t_{k-1})`` of clause type ids with
``lo <= t_0 < hi`` in lexicographic order and buckets it by class key::

    key = (partition_code * 5 + gf2_rank) * 2 + consistent

``partition_code`` encodes which positions share a variable triple
(restricted growth string, 2 bits per position).  When all triples are
distinct, ``gf2_rank`` and ``consistent`` describe the XOR system
``sum(sigma over triple_i) = parity + popcount(sign_word_i)``.
It returns ``(counts, first, last)``: per key, the number of tuples and the
flat index ``sum(t_i * M**(k-1-i))`` of its first and last member.

The compiled extension is used when it imports and ``n <= 63``; setting
``KWISESAT_PURE_PYTHON=1`` forces the fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

NUM_KEYS = _kernels_py.NUM_KEYS


def compiled_available() -> bool:
    return _ckernels is not None


def backend_name(n: int = 3) -> str:
    if _ckernels is None or os.environ.get("KWISESAT_PURE_PYTHON") or n > 63:
        return "python"
    return "compiled"


def classify_tuples(masks, k, num_types, parity, n, lo, hi, backend: str | None = None):
    backend = backend or backend_name(n)
    if backend == "compiled":
        if _ckernels is None:
            raise RuntimeError("compiled kernels are not built")
        return _ckernels.classify_tuples(masks, k, num_types, parity, n, lo, hi)
    return _kernels_py.classify_tuples(masks, k, num_types, parity, n, lo, hi)
