"""Refutation statistics: duplicate pairs (xi) and K(2,2) counts (kappa).

Both certifiers compare a statistic of the instance against a lower bound
that every satisfiable instance must meet; falling below it proves
unsatisfiability.  Thresholds are exact rationals and comparisons are exact.
"""

from __future__ import annotations

import enum
import itertools
import logging
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np
from scipy import sparse

from .core import Assignment, Clause, Instance, deduplicate, ids_to_literals, num_triples, num_types

log = logging.getLogger(__name__)

__all__ = [
    "Certificate", "Verdict", "Statistic", "xi", "xi_expectation", "xi_universal_lower_bound",
    "xi_sat_threshold", "refute_by_xi", "BipartiteLiteralGraph", "build_literal_graph",
    "kappa", "kappa_multigraph", "FourClauseCase", "classify_four_clauses",
    "count_k22_bruteforce", "KappaBounds", "kappa_bounds", "refute_by_kappa",
    "kappa_expectation_terms", "tilde_m_moment_bound", "tilde_m_fourth_moment_mc",
    "RegimeWarning",
]


class RegimeWarning(UserWarning):
    """A closed form was evaluated outside the parameter range it was derived for."""


class Verdict(str, enum.Enum):
    SAT = "SAT"
    UNSAT = "UNSAT"


class Statistic(str, enum.Enum):
    XI = "xi"
    KAPPA = "kappa"
    BERGE_ACYCLIC = "berge_acyclic"


def _frac_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class Certificate:
    verdict: Verdict
    statistic: Statistic
    value: int
    threshold: Fraction
    witness: Assignment | None = None
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        d = {
            "verdict": self.verdict.value,
            "statistic": self.statistic.value,
            "value": int(self.value),
            "threshold": _frac_str(Fraction(self.threshold)),
            "details": self.details,
        }
        if self.witness is not None:
            d["witness"] = self.witness.to_string()
        return d


# ----------------------------------------------------------------------- xi

def xi(instance: Instance) -> int:
    """Number of unordered position pairs holding the same clause type."""
    if instance.m < 2:
        return 0
    d = np.unique(instance.ids, return_counts=True)[1].astype(np.int64)
    return int((d * (d - 1) // 2).sum())


def _lam(n: int, m: int) -> Fraction:
    if n < 3 or m < 1:
        raise ValueError("need n >= 3 and m >= 1")
    return Fraction(m, num_types(n))


def xi_expectation(n: int, m: int) -> Fraction:
    lam, M = _lam(n, m), num_types(n)
    return m * (lam * M - 1) / (2 * M)


def xi_universal_lower_bound(n: int, m: int) -> Fraction:
    return m * (_lam(n, m) - 1) / 2


def xi_sat_threshold(n: int, m: int) -> Fraction:
    """Every satisfiable instance has ``xi >= m (8 lambda / 7 - 1) / 2``.

    A satisfying assignment falsifies one clause type on each variable
    triple, so at most ``7M/8`` types can occur; convexity does the rest.
    """
    return m * (Fraction(8, 7) * _lam(n, m) - 1) / 2


def refute_by_xi(instance: Instance) -> Certificate | None:
    if instance.m == 0:
        return None
    value = xi(instance)
    threshold = xi_sat_threshold(instance.n, instance.m)
    if value < threshold:
        return Certificate(Verdict.UNSAT, Statistic.XI, value, threshold,
                           details={"n": instance.n, "m": instance.m})
    return None


# ----------------------------------------------------------- literal graph

def _literal_index(var0, neg):
    return 2 * var0 + neg


class BipartiteLiteralGraph:
    """Multigraph with literal pairs on the left and literals on the right.

    Left node for literals on variables ``va < vb`` (0-based) with signs
    ``sa, sb``: ``4 * (va + C(vb, 2)) + 2 * sb + sa``; there are
    ``4 C(n, 2)`` of them.  Right node for a literal: ``2 * var + neg``.
    ``weights`` is a sparse ``(|L|, |R|)`` matrix of edge multiplicities.
    """

    def __init__(self, n: int, weights: sparse.csr_matrix):
        self.n = n
        self.weights = weights

    @property
    def num_left(self) -> int:
        return 4 * comb(self.n, 2)

    @property
    def num_right(self) -> int:
        return 2 * self.n

    def total_multiplicity(self) -> int:
        return int(self.weights.sum())

    def edges(self) -> dict[tuple[int, int], int]:
        coo = self.weights.tocoo()
        return {(int(u), int(v)): int(w) for u, v, w in zip(coo.row, coo.col, coo.data)}

    def multiplicity(self, left: int, right: int) -> int:
        return int(self.weights[left, right])

    def common_neighbours(self) -> np.ndarray:
        """``(|R|, |R|)`` array; entry ``(v, v')`` is ``|B_{v,v'}|`` in the simple graph."""
        a = (self.weights > 0).astype(np.int64)
        return (a.T @ a).toarray()

    @staticmethod
    def left_literals(left: int) -> tuple[int, int]:
        """Right-node indices of the two literals making up a left node."""
        r, signs = divmod(left, 4)
        vb = 1
        while comb(vb + 1, 2) <= r:
            vb += 1
        va = r - comb(vb, 2)
        return _literal_index(va, signs & 1), _literal_index(vb, signs >> 1)


def _left_index(va, sa, vb, sb):
    return 4 * (va + vb * (vb - 1) // 2) + 2 * sb + sa


def build_literal_graph(instance: Instance) -> BipartiteLiteralGraph:
    n = instance.n
    shape = (4 * comb(n, 2), 2 * n)
    if instance.m == 0:
        return BipartiteLiteralGraph(n, sparse.csr_matrix(shape, dtype=np.int64))
    vars_, negs = ids_to_literals(instance.ids, n)
    rows, cols = [], []
    # variables within a clause are increasing, so (i, j) with i < j is ordered
    for i, j, r in ((0, 1, 2), (0, 2, 1), (1, 2, 0)):
        rows.append(_left_index(vars_[:, i], negs[:, i], vars_[:, j], negs[:, j]))
        cols.append(_literal_index(vars_[:, r], negs[:, r]))
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    w = sparse.coo_matrix((np.ones(rows.size, dtype=np.int64), (rows, cols)), shape=shape).tocsr()
    w.sum_duplicates()
    return BipartiteLiteralGraph(n, w)


def _upper_pairs_sum(mat: np.ndarray) -> np.ndarray:
    iu = np.triu_indices(mat.shape[0], k=1)
    return mat[iu]


def kappa(instance: Instance) -> int:
    """K(2,2) count of the simple graph of the deduplicated instance.

    ``sum over right pairs {v, v'} of C(|B_{v,v'}|, 2)``.
    """
    g = build_literal_graph(deduplicate(instance))
    b = _upper_pairs_sum(g.common_neighbours())
    return int((b * (b - 1) // 2).sum())


def kappa_multigraph(instance: Instance) -> int:
    """K(2,2) count of the multigraph, weighting each by its four multiplicities."""
    w = build_literal_graph(instance).weights.astype(np.int64)
    s = _upper_pairs_sum((w.T @ w).toarray())
    w2 = w.multiply(w)
    t = _upper_pairs_sum((w2.T @ w2).toarray())
    return int(((s * s - t) // 2).sum())


def count_k22_bruteforce(instance: Instance) -> int:
    """Reference K(2,2) count by enumerating every left pair and right pair."""
    e: dict[tuple, int] = {}
    for c in instance.clauses:
        lits = [(lit.var, lit.neg) for lit in c]
        for r in range(3):
            key = (frozenset(lits[:r] + lits[r + 1:]), lits[r])
            e[key] = e.get(key, 0) + 1
    adj: dict = {}
    for (u, v), w in e.items():
        adj.setdefault(u, {})[v] = w
    total = 0
    for a1, a2 in itertools.combinations(adj.values(), 2):
        common = [v for v in a1 if v in a2]
        for v1, v2 in itertools.combinations(common, 2):
            total += a1[v1] * a1[v2] * a2[v1] * a2[v2]
    return total


# ---------------------------------------------------------- four clauses

class FourClauseCase(enum.IntEnum):
    CASE_ONE = 1      # one K(2,2)
    CASE_TWO = 2      # two K(2,2)
    CASE_THREE = 3    # none

    @property
    def k22_count(self) -> int:
        return {1: 1, 2: 2, 3: 0}[self.value]


def _lits(c) -> frozenset:
    if isinstance(c, Clause):
        return frozenset((lit.var, lit.neg) for lit in c)
    return frozenset(c)


def _is_case_one(c1, c2, c3, c4) -> bool:
    return (not c1 & c4 and len(c2 & c1) == 2 and len(c2 & c4) == 1
            and c3 == (c1 - c2) | (c4 - c2))


def _is_case_two(c1, c2, c3, c4) -> bool:
    shared = c1 & c4
    if len(shared) != 1:
        return False
    return (shared <= c2 and len(c2 & c1) == 2 and len(c2 & c4) == 2
            and c3 == shared | (c1 - c2) | (c4 - c2))


def classify_four_clauses(c1, c2, c3, c4) -> FourClauseCase:
    """Which K(2,2) pattern four clauses form.

    Clauses may be :class:`Clause` values or iterables of hashable literals.
    Repeated clauses give ``CASE_THREE``.
    """
    cs = [_lits(c) for c in (c1, c2, c3, c4)]
    # both patterns use exactly five or six distinct literals
    if len(set(cs)) < 4 or len(frozenset().union(*cs)) not in (5, 6):
        return FourClauseCase.CASE_THREE
    one = any(_is_case_one(*p) for p in itertools.permutations(cs))
    two = any(_is_case_two(*p) for p in itertools.permutations(cs))
    if one and two:
        raise RuntimeError("four clauses match both K(2,2) patterns")
    if one:
        return FourClauseCase.CASE_ONE
    if two:
        return FourClauseCase.CASE_TWO
    return FourClauseCase.CASE_THREE


# ------------------------------------------------------------------ bounds

@dataclass(frozen=True)
class KappaBounds:
    expectation_upper: Fraction
    universal_lower: Fraction
    sat_lower: Fraction


def kappa_bounds(n: int, m: int) -> KappaBounds:
    """Closed forms in ``n`` and the clause count (``m`` or the deduplicated count)."""
    if n < 3:
        raise ValueError("n must be >= 3")
    m4, m3 = Fraction(m) ** 4, Fraction(m) ** 3
    n6, n4 = Fraction(n) ** 6, Fraction(n) ** 4
    return KappaBounds(
        expectation_upper=81 * m4 / (64 * n6) + 729 * m3 / (32 * n4),
        universal_lower=81 * m4 / (64 * n6) - 27 * m3 / (8 * n4),
        sat_lower=82 * m4 / (64 * n6) - 123 * m3 / (16 * n4),
    )


def refute_by_kappa(instance: Instance) -> Certificate | None:
    reduced = deduplicate(instance)
    if reduced.m == 0:
        return None
    threshold = kappa_bounds(instance.n, reduced.m).sat_lower
    if threshold <= 0:
        return None
    value = kappa(reduced)
    if value < threshold:
        return Certificate(Verdict.UNSAT, Statistic.KAPPA, value, threshold,
                           details={"n": instance.n, "m": instance.m, "m_tilde": reduced.m})
    return None


def kappa_expectation_terms(n: int) -> dict:
    """Per-quadruple case probabilities as bounded before simplification.

    The simplified tail forms are only valid for ``n >= 10``; below that the
    result carries ``regime_ok = False`` and a :class:`RegimeWarning` is issued.
    """
    if n < 3:
        raise ValueError("n must be >= 3")
    N = num_triples(n)
    p1 = 24 * Fraction(9, 8 * N) * Fraction(1, 8 * N) * Fraction(1, 4)
    p2 = Fraction(24, 4) * Fraction(3 * 4 * comb(n - 1, 2), 8 * N) * Fraction(4, 8 * N) * Fraction(1, 8 * N)
    ok = n >= 10
    if not ok:
        warnings.warn(f"n={n} < 10: simplified tail bounds do not apply", RegimeWarning, stacklevel=2)
    return {
        "p1_upper": p1,
        "p2_upper": p2,
        "p1_simplified": Fraction(243, 8 * n**6) + Fraction(1215, 4 * n**7),
        "p2_simplified": Fraction(243, 2 * n**7),
        "regime_ok": ok,
    }


def tilde_m_moment_bound(n: int, m: int) -> Fraction:
    """Lower bound ``m^4 - (125/6) m^3 n^2`` on the fourth moment of the deduplicated count."""
    if m * m > 10 * n**5:
        warnings.warn(f"m={m} exceeds sqrt(10) n^(5/2); the moment bound is not guaranteed",
                      RegimeWarning, stacklevel=2)
    return Fraction(m) ** 4 - Fraction(125, 6) * Fraction(m) ** 3 * n * n


def tilde_m_fourth_moment_mc(spec, trials: int, rng: np.random.Generator) -> tuple[float, float]:
    """Monte Carlo mean of ``m_tilde ** 4`` and its standard error."""
    from .generators import sample

    vals = np.empty(trials, dtype=np.float64)
    for t in range(trials):
        inst = sample(spec, rng).instance
        vals[t] = float(np.unique(inst.ids).size) ** 4
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
