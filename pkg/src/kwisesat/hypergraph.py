"""Variable hypergraph of an instance, Berge cycles and leaf elimination."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial

import numpy as np

from .core import Assignment, Instance, evaluate, ids_to_literals, num_triples
from .refutation import Certificate, Statistic, Verdict

__all__ = [
    "VariableHypergraph", "IncidenceCycle", "BudgetExceeded", "find_incidence_cycle",
    "leaf_elimination_solve", "certify_sat", "count_berge_paths", "count_berge_cycles",
    "ExpectedCounts", "expected_counts", "expected_ordered_paths", "expected_cycles",
    "unsat_prob_upper",
]

DFS_BUDGET = 10**7


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class VariableHypergraph:
    """3-uniform hypergraph; ``edges`` is an ``(m, 3)`` array of 0-based variables."""

    n: int
    edges: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 3)
        if e.size and (e.min() < 0 or e.max() >= self.n):
            raise ValueError("hyperedge vertex outside [0, n)")
        if e.size and ((e[:, 0] == e[:, 1]) | (e[:, 0] == e[:, 2]) | (e[:, 1] == e[:, 2])).any():
            raise ValueError("hyperedge with a repeated vertex")
        e.flags.writeable = False
        object.__setattr__(self, "edges", e)

    @classmethod
    def from_instance(cls, instance: Instance) -> "VariableHypergraph":
        return cls(instance.n, ids_to_literals(instance.ids, instance.n)[0])

    @property
    def m(self) -> int:
        return len(self.edges)

    def edge_sets(self) -> list[frozenset]:
        return [frozenset(int(v) for v in row) for row in self.edges]


# --------------------------------------------------------- incidence cycles

@dataclass(frozen=True)
class IncidenceCycle:
    """Closed walk in the vertex/hyperedge incidence graph.

    ``nodes`` alternates ``("v", vertex)`` and ``("e", edge_index)`` and
    returns to its first node.
    """

    nodes: tuple

    @property
    def edge_indices(self) -> list[int]:
        return sorted({i for kind, i in self.nodes if kind == "e"})


def find_incidence_cycle(h: VariableHypergraph) -> IncidenceCycle | None:
    """A cycle in the incidence graph, or ``None`` when it is a forest."""
    parent: dict = {}

    def find(x):
        root = x
        while parent.setdefault(root, root) != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    adj: dict = {}
    for i, row in enumerate(h.edges):
        e = ("e", i)
        for v in row:
            v = ("v", int(v))
            if find(e) == find(v):
                path = _bfs_path(adj, v, e)
                return IncidenceCycle(tuple(path) + (v,))
            parent[find(e)] = find(v)
            adj.setdefault(e, []).append(v)
            adj.setdefault(v, []).append(e)
    return None


def _bfs_path(adj, src, dst):
    prev = {src: None}
    queue = deque([src])
    while queue:
        x = queue.popleft()
        if x == dst:
            break
        for y in adj.get(x, ()):
            if y not in prev:
                prev[y] = x
                queue.append(y)
    path = []
    x = dst
    while x is not None:
        path.append(x)
        x = prev[x]
    return path[::-1]


# --------------------------------------------------------- leaf elimination

def leaf_elimination_solve(instance: Instance) -> Assignment | None:
    """Satisfy clauses one at a time through variables no other clause uses.

    Each step takes a remaining clause holding a variable that occurs in no
    other remaining clause, sets that variable to make its literal true, and
    drops the clause.  Returns the assignment (unused variables are 0) when
    every clause is dropped and ``None`` otherwise.  Always succeeds when the
    incidence graph is a forest.
    """
    n, m = instance.n, instance.m
    bits = [0] * n
    if m == 0:
        return Assignment(tuple(bits))
    vars_, negs = ids_to_literals(instance.ids, n)
    vars_ = vars_.tolist()
    negs = negs.tolist()
    occ: dict[int, list[int]] = {}
    for j, row in enumerate(vars_):
        for v in row:
            occ.setdefault(v, []).append(j)
    count = {v: len(js) for v, js in occ.items()}
    alive = [True] * m
    queue = deque(j for j in range(m) if any(count[v] == 1 for v in vars_[j]))
    removed = 0
    while queue:
        j = queue.popleft()
        if not alive[j]:
            continue
        slot = next((s for s in range(3) if count[vars_[j][s]] == 1), None)
        if slot is None:
            continue
        v = vars_[j][slot]
        bits[v] = 1 - negs[j][slot]
        alive[j] = False
        removed += 1
        for u in vars_[j]:
            count[u] -= 1
            if count[u] == 1:
                queue.extend(k for k in occ[u] if alive[k])
    if removed < m:
        return None
    sigma = Assignment(tuple(bits))
    if not evaluate(instance, sigma).satisfied:  # pragma: no cover - would be a bug
        raise AssertionError("leaf elimination produced a non-satisfying assignment")
    return sigma


def certify_sat(instance: Instance) -> Certificate | None:
    """SAT certificate from leaf elimination.

    ``value`` is the number of clauses left uneliminated (0 on success) and
    the certificate requires it to be below ``threshold = 1``.
    """
    sigma = leaf_elimination_solve(instance)
    if sigma is None:
        return None
    return Certificate(Verdict.SAT, Statistic.BERGE_ACYCLIC, 0, Fraction(1), witness=sigma,
                       details={"n": instance.n, "m": instance.m})


# --------------------------------------------------------- counting

def _overlaps(h: VariableHypergraph):
    sets = h.edge_sets()
    m = len(sets)
    inter = [[len(sets[i] & sets[j]) for j in range(m)] for i in range(m)]
    single = [[j for j in range(m) if j != i and inter[i][j] == 1] for i in range(m)]
    return sets, inter, single


def _guard(h: VariableHypergraph, length: int, max_edges: int):
    if h.m > max_edges:
        raise BudgetExceeded(f"m={h.m} exceeds the exhaustive limit {max_edges}")
    if length < 2:
        raise ValueError("length must be >= 2")


def _walk(h: VariableHypergraph, length: int, closed: bool, budget: int) -> int:
    """Count canonical sequences of distinct edges forming a Berge path or cycle.

    Canonical form: a cycle starts at its smallest edge index and has
    ``second < last``; a path has ``first < last``.
    """
    sets, inter, single = _overlaps(h)
    steps = 0
    total = 0
    seq: list[int] = []

    def extend():
        nonlocal steps, total
        steps += 1
        if steps > budget:
            raise BudgetExceeded(f"search exceeded {budget} steps")
        last = seq[-1]
        if len(seq) == length:
            if closed:
                if seq[1] < seq[-1] and inter[last][seq[0]] == 1 and _distinct_joints(seq, sets):
                    total += 1
            elif seq[0] < seq[-1]:
                total += 1
            return
        for nxt in single[last]:
            if nxt in seq or (closed and nxt < seq[0]):
                continue
            # every earlier edge except the predecessor must be disjoint; when
            # closing a cycle the first edge is also a neighbour of the last one
            ok = True
            for pos, e in enumerate(seq[:-1]):
                closing_pair = closed and pos == 0 and len(seq) == length - 1
                if not closing_pair and inter[nxt][e]:
                    ok = False
                    break
            if ok:
                seq.append(nxt)
                extend()
                seq.pop()

    for start in range(h.m):
        seq.append(start)
        extend()
        seq.pop()
    return total


def _distinct_joints(seq, sets) -> bool:
    joints = [next(iter(sets[a] & sets[b])) for a, b in zip(seq, seq[1:] + seq[:1])]
    return len(set(joints)) == len(joints)


def count_berge_paths(h: VariableHypergraph, k: int, *, max_edges: int = 200,
                      budget: int = DFS_BUDGET) -> int:
    """Unordered Berge paths of ``k`` edges."""
    _guard(h, k, max_edges)
    return _walk(h, k, closed=False, budget=budget)


def count_berge_cycles(h: VariableHypergraph, length: int, *, max_edges: int = 200,
                       budget: int = DFS_BUDGET) -> int:
    """Berge cycles of the given length.

    Length 2 counts edge pairs sharing at least two vertices.  Longer cycles
    need consecutive edges meeting in exactly one vertex, other pairs
    disjoint, and distinct meeting vertices.
    """
    _guard(h, length, max_edges)
    if length == 2:
        e = np.sort(h.edges, axis=1)
        total = 0
        for i in range(h.m):
            shared = (e[i + 1:, :, None] == e[i][None, None, :]).any(axis=2).sum(axis=1)
            total += int((shared >= 2).sum())
        return total
    return _walk(h, length, closed=True, budget=budget)


# --------------------------------------------------------- expectations

def _c2(x: int) -> int:
    return x * (x - 1) // 2 if x >= 2 else 0


def _chain(n: int, upto: int) -> Fraction:
    """Probability that uniform triples e_2..e_upto extend a fixed e_1 into a path."""
    N = num_triples(n)
    p = Fraction(3 * _c2(n - 3), N)
    for t in range(3, upto + 1):
        p *= Fraction(2 * _c2(n - 2 * t + 1), N)
    return p


def expected_ordered_paths(n: int, m: int, k: int) -> Fraction:
    """Expected number of ordered k-tuples of clauses forming a Berge path (independent clauses)."""
    return factorial(k) * comb(m, k) * _chain(n, k)


def expected_cycles(n: int, m: int, length: int) -> Fraction:
    N = num_triples(n)
    if length == 2:
        return comb(m, 2) * Fraction(3 * (n - 3) + 1, N)
    last = Fraction(4 * max(n - 2 * length + 1, 0), N)
    return Fraction(1, 6) * factorial(length) * comb(m, length) * _chain(n, length - 1) * last


def unsat_prob_upper(n: int, m: int, k: int) -> Fraction:
    """Simplified bound on the probability of a cycle (hence of unsatisfiability)."""
    total = Fraction(2, 3) * Fraction(6 * m) ** k / Fraction(n) ** (k - 1)
    total += Fraction(3 * m, n) ** 2
    total += sum((Fraction(1, 6) * Fraction(6 * m, n) ** ell for ell in range(3, k)), start=Fraction(0))
    return total


@dataclass(frozen=True)
class ExpectedCounts:
    ordered_path_tuples: Fraction
    unordered_paths: Fraction
    cycles: dict = field(default_factory=dict)
    unsat_prob_upper: Fraction = Fraction(0)

    def to_json(self) -> dict:
        f = lambda x: f"{x.numerator}/{x.denominator}"  # noqa: E731
        return {"ordered_path_tuples": f(self.ordered_path_tuples),
                "unordered_paths": f(self.unordered_paths),
                "cycles": {str(k): f(v) for k, v in self.cycles.items()},
                "unsat_prob_upper": f(self.unsat_prob_upper),
                "unsat_prob_upper_float": float(self.unsat_prob_upper)}


def expected_counts(n: int, m: int, k: int) -> ExpectedCounts:
    if n < 3:
        raise ValueError("n must be >= 3")
    if k < 2:
        raise ValueError("k must be >= 2")
    ordered = expected_ordered_paths(n, m, k)
    return ExpectedCounts(
        ordered_path_tuples=ordered,
        unordered_paths=ordered / 2,
        cycles={ell: expected_cycles(n, m, ell) for ell in range(2, k)},
        unsat_prob_upper=unsat_prob_upper(n, m, k),
    )
