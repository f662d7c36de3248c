"""Random instance generators.

* ``independent`` -- every clause i.i.d. uniform over the M clause types.
* ``pairwise``    -- 2-clause independent, ``m = C(n, 3)``; satisfiable by a
  planted assignment except with probability ``1 / C(n, 3)``.
* ``threewise``   -- 3-clause independent mixture of a planted branch, a
  doubled-triple branch and the single-triple branch.
* ``univar``      -- all clauses on one random variable triple.

Planted branches draw each clause's signs so that the number of literals
made true by the planted assignment is odd (``parity=1``).  ``parity=0`` is
kept for experiments only: it preserves the independence structure but
makes the planted assignment falsify clauses.
"""

from __future__ import annotations

import enum
from functools import lru_cache
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .core import Assignment, Instance, num_triples, num_types, triples_of

__all__ = [
    "Model", "GeneratorSpec", "Generated", "make_rng", "sample",
    "gen_independent", "gen_univar", "gen_pairwise", "gen_threewise",
    "sample_parity_signs", "sample_batch_ids",
]


class Model(str, enum.Enum):
    INDEPENDENT = "ind"
    PAIRWISE = "pairwise"
    THREEWISE = "threewise"
    UNIVAR = "univar"

    @classmethod
    def parse(cls, value: "str | Model") -> "Model":
        if isinstance(value, cls):
            return value
        aliases = {"independent": "ind", "model1": "ind", "model2": "pairwise",
                   "model3": "threewise"}
        return cls(aliases.get(value.lower(), value.lower()))


def make_rng(seed: int, *index: int) -> np.random.Generator:
    """PCG64 stream for ``seed``; ``index`` selects an independent substream."""
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(i) for i in index))))


@dataclass(frozen=True)
class GeneratorSpec:
    """Parameters of one generator.

    ``weights`` picks the Model-3 mixture weight of the doubled-triple
    branch: ``"exact"`` uses ``p = (m-1)(1/N - 1/N^2)`` with ``N = C(n,3)``,
    the value that makes the mixture 3-clause independent; ``"display"``
    uses ``(m-1)(1/N - 1/(3 N^2))``, which is not (see
    ``tests/test_independence.py``).
    """

    model: Model
    n: int
    m: int | None = None
    seed: int = 0
    parity: int = 1
    weights: str = "exact"

    def __post_init__(self):
        object.__setattr__(self, "model", Model.parse(self.model))
        n, m = self.n, self.m
        if n < 3:
            raise ValueError(f"n must be >= 3, got {n}")
        if self.parity not in (0, 1):
            raise ValueError("parity must be 0 or 1")
        if self.weights not in ("exact", "display"):
            raise ValueError(f"unknown weights {self.weights!r}")
        N = num_triples(n)
        if self.model is Model.PAIRWISE:
            if m is not None and m != N:
                raise ValueError(f"pairwise model has m = C(n,3) = {N}, got m={m}")
            object.__setattr__(self, "m", N)
        elif m is None or m < 1:
            raise ValueError(f"{self.model.value} model needs m >= 1")
        if self.model is Model.THREEWISE:
            if m % 2 or 3 * m > N:
                raise ValueError(f"threewise needs even m <= C(n,3)/3 = {N / 3:.2f}, got m={m}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def num_triples(self) -> int:
        return num_triples(self.n)

    @property
    def num_types(self) -> int:
        return num_types(self.n)

    @property
    def p(self) -> Fraction:
        """Mixture weight of the doubled-triple branch (threewise only)."""
        if self.model is not Model.THREEWISE:
            return Fraction(0)
        N = self.num_triples
        if self.weights == "display":
            return (self.m - 1) * (Fraction(1, N) - Fraction(1, 3 * N * N))
        return (self.m - 1) * (Fraction(1, N) - Fraction(1, N * N))

    @property
    def q(self) -> Fraction:
        """Mixture weight of the single-triple branch."""
        N = self.num_triples
        if self.model is Model.THREEWISE:
            return Fraction(1, N * N)
        if self.model is Model.PAIRWISE:
            return Fraction(1, N)
        return Fraction(0)

    def branches(self) -> list[tuple[Fraction, str]]:
        """``(weight, law)`` pairs; laws are iid, planted, paired, univar."""
        if self.model is Model.INDEPENDENT:
            return [(Fraction(1), "iid")]
        if self.model is Model.UNIVAR:
            return [(Fraction(1), "univar")]
        if self.model is Model.PAIRWISE:
            return [(1 - self.q, "planted"), (self.q, "univar")]
        return [(1 - self.p - self.q, "planted"), (self.p, "paired"), (self.q, "univar")]


class Generated(NamedTuple):
    instance: Instance
    planted: Assignment | None
    branch: str


_U_BITS = 53


@lru_cache(maxsize=256)
def _branch_table(spec: "GeneratorSpec") -> tuple[tuple[str, ...], tuple[int, ...]]:
    """Laws and integer cut points for exact branch selection.

    ``rng.random()`` returns ``j / 2**53`` for an integer ``j``; the draw
    falls below the cumulative weight ``c`` exactly when ``j < ceil(c 2**53)``.
    """
    laws, cuts = [], []
    acc = Fraction(0)
    for weight, law in spec.branches():
        acc += weight
        laws.append(law)
        cuts.append(-((-acc.numerator << _U_BITS) // acc.denominator))
    return tuple(laws), tuple(cuts)


def _pick_branch(spec: GeneratorSpec, rng: np.random.Generator) -> str:
    laws, cuts = _branch_table(spec)
    j = int(rng.random() * (1 << _U_BITS))
    for law, cut in zip(laws, cuts):
        if j < cut:
            return law
    return laws[-1]


def sample_parity_signs(sigma3, rng: np.random.Generator, parity: int = 1) -> int:
    """Sign word uniform over the 4 words with ``popcount + sum(sigma3) = parity (mod 2)``.

    With ``parity=1`` the clause has one or three literals true under the
    planted bits ``sigma3``.
    """
    low = int(rng.integers(0, 4))
    s = int(sigma3[0]) + int(sigma3[1]) + int(sigma3[2])
    top = (parity - s - bin(low).count("1")) & 1
    return low | top << 2


def _planted_words(triples: np.ndarray, sigma: np.ndarray, rng: np.random.Generator,
                   parity: int) -> np.ndarray:
    # Vectorised sample_parity_signs over many triples.
    low = rng.integers(0, 4, size=len(triples))
    s = sigma[triples].sum(axis=1)
    top = (parity - s - (low & 1) - (low >> 1)) & 1
    return low | top << 2


def _planted(n: int, m: int, rng, parity: int) -> Generated:
    N = num_triples(n)
    ranks = rng.permutation(N)[:m] if m == N else rng.choice(N, size=m, replace=False)
    sigma = rng.integers(0, 2, size=n)
    words = _planted_words(triples_of(ranks, n), sigma, rng, parity)
    return Generated(Instance(n, ranks * 8 + words), Assignment(tuple(sigma)), "planted")


def _paired(n: int, m: int, rng) -> Generated:
    N = num_triples(n)
    pair_ranks = rng.choice(N, size=m // 2, replace=False)
    order = rng.permutation(m)
    ranks = np.empty(m, dtype=np.int64)
    # positions order[2i], order[2i+1] form the i-th pair of a uniform perfect matching
    ranks[order[0::2]] = pair_ranks
    ranks[order[1::2]] = pair_ranks
    words = rng.integers(0, 8, size=m)
    return Generated(Instance(n, ranks * 8 + words), None, "paired")


def _univar(n: int, m: int, rng) -> Generated:
    r = int(rng.integers(0, num_triples(n)))
    words = rng.integers(0, 8, size=m)
    return Generated(Instance(n, r * 8 + words), None, "univar")


def sample(spec: GeneratorSpec, rng: np.random.Generator | None = None) -> Generated:
    """Draw one instance; ``rng`` defaults to the stream seeded by ``spec.seed``."""
    if rng is None:
        rng = make_rng(spec.seed)
    n, m = spec.n, spec.m
    law = _pick_branch(spec, rng)
    if law == "iid":
        return Generated(Instance(n, rng.integers(0, num_types(n), size=m)), None, "iid")
    if law == "univar":
        return _univar(n, m, rng)
    if law == "paired":
        return _paired(n, m, rng)
    return _planted(n, m, rng, spec.parity)


def gen_independent(n: int, m: int, rng: np.random.Generator) -> Instance:
    return sample(GeneratorSpec(Model.INDEPENDENT, n, m), rng).instance


def gen_univar(n: int, m: int, rng: np.random.Generator) -> Instance:
    return sample(GeneratorSpec(Model.UNIVAR, n, m), rng).instance


def gen_pairwise(n: int, rng: np.random.Generator) -> Instance:
    return sample(GeneratorSpec(Model.PAIRWISE, n), rng).instance


def gen_threewise(n: int, m: int, rng: np.random.Generator) -> Instance:
    return sample(GeneratorSpec(Model.THREEWISE, n, m), rng).instance


def sample_batch_ids(spec: GeneratorSpec, trials: int, rng: np.random.Generator,
                     positions=None) -> np.ndarray:
    """``(trials, len(positions))`` array of type ids at ``positions``.

    Vectorised over trials for ``n <= 62``: every law is re-expressed on the
    chosen positions only (uniform ordered distinct triples for the planted
    branch, the restriction of a uniform perfect matching for the doubled
    branch).  The test suite checks it against :func:`sample` and the exact
    joint law.  Larger ``n`` loops over :func:`sample`.
    """
    positions = list(range(spec.m)) if positions is None else [int(p) for p in positions]
    k = len(positions)
    if len(set(positions)) != k or (k and (min(positions) < 0 or max(positions) >= spec.m)):
        raise ValueError(f"positions must be distinct indices in [0, {spec.m})")
    if spec.model is Model.INDEPENDENT:
        return rng.integers(0, spec.num_types, size=(trials, k))
    if spec.n > 62:
        out = np.empty((trials, k), dtype=np.int64)
        for t in range(trials):
            out[t] = sample(spec, rng).instance.ids[positions]
        return out
    laws, cuts = _branch_table(spec)
    j = (rng.random(trials) * (1 << _U_BITS)).astype(np.int64)
    which = np.searchsorted(np.asarray(cuts, dtype=np.int64), j, side="right")
    which = np.minimum(which, len(laws) - 1)
    out = np.empty((trials, k), dtype=np.int64)
    for li, law in enumerate(laws):
        rows = np.flatnonzero(which == li)
        if rows.size:
            out[rows] = _BATCH[law](spec, rows.size, rng, positions)
    return out


def _distinct_ranks(trials: int, k: int, N: int, rng) -> np.ndarray:
    """``(trials, k)`` uniform ordered k-tuples of distinct values in [0, N)."""
    if k == 0:
        return np.empty((trials, 0), dtype=np.int64)
    if 2 * k * k > N:
        out = np.empty((trials, k), dtype=np.int64)
        block = max(1, (1 << 22) // N)
        for lo in range(0, trials, block):
            hi = min(trials, lo + block)
            out[lo:hi] = np.argsort(rng.random((hi - lo, N)), axis=1)[:, :k]
        return out
    out = rng.integers(0, N, size=(trials, k))
    bad = np.ones(trials, dtype=bool)
    while True:
        srt = np.sort(out, axis=1)
        bad = (srt[:, 1:] == srt[:, :-1]).any(axis=1)
        if not bad.any():
            return out
        out[bad] = rng.integers(0, N, size=(int(bad.sum()), k))


def _batch_planted(spec, trials, rng, positions):
    n, k = spec.n, len(positions)
    ranks = _distinct_ranks(trials, k, spec.num_triples, rng)
    trip = triples_of(ranks, n)                                   # (T, k, 3)
    sigma = rng.integers(0, 2, size=(trials, n))
    s = np.take_along_axis(sigma, trip.reshape(trials, -1), axis=1).reshape(trials, k, 3).sum(axis=2)
    low = rng.integers(0, 4, size=(trials, k))
    top = (spec.parity - s - (low & 1) - (low >> 1)) & 1
    return ranks * 8 + (low | top << 2)


def _batch_paired(spec, trials, rng, positions):
    m, k = spec.m, len(positions)
    partner = np.empty((trials, m), dtype=np.int64)
    block = max(1, (1 << 22) // m)
    for lo in range(0, trials, block):
        hi = min(trials, lo + block)
        order = np.argsort(rng.random((hi - lo, m)), axis=1)
        r = np.arange(hi - lo)[:, None]
        partner[lo:hi][r, order[:, 0::2]] = order[:, 1::2]
        partner[lo:hi][r, order[:, 1::2]] = order[:, 0::2]
    # label each chosen position by the first chosen position in its pair
    pos = np.asarray(positions)
    part = partner[:, pos]                                        # (T, k)
    label = np.tile(np.arange(k), (trials, 1))
    for a in range(k):
        for b in range(a):
            label[:, a] = np.where(part[:, a] == pos[b], label[:, b], label[:, a])
    # compress labels to 0..j-1 in first-appearance order and draw distinct triples
    ranks = _distinct_ranks(trials, k, spec.num_triples, rng)
    tri = np.take_along_axis(ranks, label, axis=1)
    return tri * 8 + rng.integers(0, 8, size=(trials, k))


def _batch_univar(spec, trials, rng, positions):
    r = rng.integers(0, spec.num_triples, size=(trials, 1))
    return r * 8 + rng.integers(0, 8, size=(trials, len(positions)))


_BATCH = {"planted": _batch_planted, "paired": _batch_paired, "univar": _batch_univar}
