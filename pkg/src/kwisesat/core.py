"""Variables, literals, clauses, instances and the clause-type encoding.

A clause over ``n`` variables is stored canonically, sorted by variable
index.  Every canonical clause has an integer *type id* in
``[0, 8 * C(n, 3))``::

    type_id = colex_rank(var triple) * 8 + sign_word

where bit ``i`` of ``sign_word`` is set when the ``i``-th literal (in
variable order) is negated.  The colex rank of a 0-based triple
``a < b < c`` is ``C(a, 1) + C(b, 2) + C(c, 3)``, which does not depend on
``n``; this makes ids over ``n`` variables a prefix of ids over ``n + 1``.

An :class:`Instance` keeps its clauses as a read-only ``int64`` array of
type ids.  :class:`Clause` objects are materialised on demand.
"""

from __future__ import annotations

import io
import logging
import os
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

log = logging.getLogger(__name__)

__all__ = [
    "Literal", "Clause", "Instance", "Assignment", "Evaluation", "DimacsFile",
    "DimacsError", "canonicalize", "num_triples", "num_types",
    "clause_to_type_id", "type_id_to_clause", "triple_rank", "triple_table", "unrank_triples", "triples_of",
    "evaluate", "deduplicate", "parse_dimacs", "format_dimacs", "load_dimacs",
    "save_dimacs",
]


class DimacsError(ValueError):
    pass


class Literal(NamedTuple):
    """A variable (1-based) with a sign; ``neg=True`` is the negation."""

    var: int
    neg: bool = False

    @classmethod
    def from_dimacs(cls, lit: int) -> "Literal":
        if lit == 0:
            raise ValueError("0 is not a literal")
        return cls(abs(lit), lit < 0)

    def to_dimacs(self) -> int:
        return -self.var if self.neg else self.var

    def value(self, bit: int) -> bool:
        """Truth value of the literal when its variable is set to ``bit``."""
        return bool(bit) != self.neg

    def __str__(self) -> str:
        return f"{'-' if self.neg else ''}x{self.var}"


class Clause(NamedTuple):
    """Three literals on strictly increasing variables.

    Build clauses with :func:`canonicalize`; the tuple constructor does not
    sort or validate.
    """

    a: Literal
    b: Literal
    c: Literal

    @property
    def variables(self) -> tuple[int, int, int]:
        return (self.a.var, self.b.var, self.c.var)

    @property
    def signs(self) -> tuple[bool, bool, bool]:
        return (self.a.neg, self.b.neg, self.c.neg)

    def to_dimacs(self) -> tuple[int, int, int]:
        return (self.a.to_dimacs(), self.b.to_dimacs(), self.c.to_dimacs())

    def __str__(self) -> str:
        return "(" + " v ".join(str(l) for l in self) + ")"


def canonicalize(l1: Literal, l2: Literal, l3: Literal) -> Clause:
    """Sort three literals by variable; reject repeated variables."""
    lits = sorted((Literal(*l1), Literal(*l2), Literal(*l3)))
    if lits[0].var == lits[1].var or lits[1].var == lits[2].var:
        raise ValueError(f"clause repeats a variable: {lits}")
    if lits[0].var < 1:
        raise ValueError(f"variables are 1-based, got {lits[0].var}")
    return Clause(*lits)


def num_triples(n: int) -> int:
    return comb(n, 3)


def num_types(n: int) -> int:
    """M = 8 * C(n, 3), the number of distinct clauses over n variables."""
    return 8 * comb(n, 3)


def triple_rank(a: int, b: int, c: int) -> int:
    """Colex rank of the 0-based triple ``a < b < c``."""
    return a + comb(b, 2) + comb(c, 3)


def _unrank_triple(r: int) -> tuple[int, int, int]:
    c = 2
    while comb(c + 1, 3) <= r:
        c += 1
    r -= comb(c, 3)
    b = 1
    while comb(b + 1, 2) <= r:
        b += 1
    r -= comb(b, 2)
    return r, b, c


def unrank_triples(ranks) -> np.ndarray:
    """Vectorised inverse of :func:`triple_rank`: ``(len(ranks), 3)`` array."""
    r = np.asarray(ranks, dtype=np.int64).reshape(-1)
    c = np.floor(np.cbrt(6.0 * r.astype(np.float64))).astype(np.int64) + 1
    c = np.maximum(c, 2)
    # float estimate is within one of the answer; settle it exactly
    c3 = lambda x: x * (x - 1) * (x - 2) // 6  # noqa: E731
    for _ in range(3):
        c = np.where(c3(c) > r, c - 1, c)
        c = np.where(c3(c + 1) <= r, c + 1, c)
    r = r - c3(c)
    b = np.floor(np.sqrt(2.0 * r.astype(np.float64))).astype(np.int64) + 1
    b = np.maximum(b, 1)
    c2 = lambda x: x * (x - 1) // 2  # noqa: E731
    for _ in range(3):
        b = np.where(c2(b) > r, b - 1, b)
        b = np.where(c2(b + 1) <= r, b + 1, b)
    a = r - c2(b)
    return np.stack([a, b, c], axis=-1)


TABLE_MAX_TRIPLES = 200_000


def triples_of(ranks, n: int) -> np.ndarray:
    """Variable triples of the given ranks, via the cached table when it is small."""
    if comb(n, 3) <= TABLE_MAX_TRIPLES:
        return triple_table(n)[np.asarray(ranks, dtype=np.int64)]
    return unrank_triples(ranks).reshape(np.shape(ranks) + (3,))


@lru_cache(maxsize=64)
def triple_table(n: int) -> np.ndarray:
    """``(C(n,3), 3)`` array of 0-based variable triples in colex order."""
    out = np.empty((comb(n, 3), 3), dtype=np.int64)
    i = 0
    for c in range(2, n):
        for b in range(1, c):
            for a in range(b):
                out[i] = (a, b, c)
                i += 1
    out.flags.writeable = False
    return out


def clause_to_type_id(clause: Clause, n: int) -> int:
    a, b, c = clause
    if not (1 <= a.var < b.var < c.var <= n):
        raise ValueError(f"{clause} is not a canonical clause over {n} variables")
    word = int(a.neg) | int(b.neg) << 1 | int(c.neg) << 2
    return triple_rank(a.var - 1, b.var - 1, c.var - 1) * 8 + word


def type_id_to_clause(type_id: int, n: int) -> Clause:
    if not 0 <= type_id < num_types(n):
        raise ValueError(f"type id {type_id} outside [0, {num_types(n)})")
    word = type_id & 7
    a, b, c = _unrank_triple(type_id >> 3)
    return Clause(Literal(a + 1, bool(word & 1)),
                  Literal(b + 1, bool(word & 2)),
                  Literal(c + 1, bool(word & 4)))


def ids_to_literals(ids: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised decode: ``(vars, negs)`` arrays of shape ``(m, 3)``.

    ``vars`` are 0-based.
    """
    ids = np.asarray(ids, dtype=np.int64)
    triples = triples_of(ids >> 3, n)
    words = ids & 7
    negs = np.stack([(words >> i) & 1 for i in range(3)], axis=-1)
    return triples, negs


@dataclass(frozen=True)
class Assignment:
    """A truth assignment; ``bits[i]`` is the value of variable ``i + 1``."""

    bits: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "bits", tuple(int(bool(b)) for b in self.bits))

    @classmethod
    def from_string(cls, s: str) -> "Assignment":
        s = s.strip()
        if set(s) - {"0", "1"}:
            raise ValueError(f"assignment must be a 0/1 string, got {s!r}")
        return cls(tuple(int(ch) for ch in s))

    def to_string(self) -> str:
        return "".join(map(str, self.bits))

    def __len__(self) -> int:
        return len(self.bits)

    def __getitem__(self, i):
        return self.bits[i]

    def __iter__(self):
        return iter(self.bits)

    def as_array(self) -> np.ndarray:
        return np.fromiter(self.bits, dtype=np.uint8, count=len(self.bits))


class Instance:
    """An ordered multiset of canonical clauses over ``n`` variables."""

    __slots__ = ("n", "ids")

    def __init__(self, n: int, ids: Iterable[int] = ()):
        if n < 3:
            raise ValueError(f"need at least 3 variables, got n={n}")
        arr = np.array(ids if not isinstance(ids, np.ndarray) else ids,
                       dtype=np.int64).reshape(-1)
        if arr.size and (arr.min() < 0 or arr.max() >= num_types(n)):
            raise ValueError(f"type ids must lie in [0, {num_types(n)})")
        arr.flags.writeable = False
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "ids", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Instance is immutable")

    @classmethod
    def from_clauses(cls, n: int, clauses: Iterable[Clause | Sequence[int]]) -> "Instance":
        ids = []
        for c in clauses:
            if not isinstance(c, Clause):
                c = canonicalize(*(Literal.from_dimacs(x) for x in c))
            ids.append(clause_to_type_id(c, n))
        return cls(n, ids)

    @property
    def m(self) -> int:
        return int(self.ids.size)

    @property
    def clauses(self) -> tuple[Clause, ...]:
        return tuple(type_id_to_clause(int(t), self.n) for t in self.ids)

    def literal_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return ids_to_literals(self.ids, self.n)

    def triple_ranks(self) -> np.ndarray:
        return self.ids >> 3

    def __len__(self) -> int:
        return self.m

    def __iter__(self) -> Iterator[Clause]:
        return iter(self.clauses)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Instance):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.ids, other.ids)

    def __hash__(self) -> int:
        return hash((self.n, self.ids.tobytes()))

    def __repr__(self) -> str:
        return f"Instance(n={self.n}, m={self.m})"


class Evaluation(NamedTuple):
    satisfied: bool
    first_unsatisfied: int | None


def evaluate(instance: Instance, assignment: Assignment | Sequence[int]) -> Evaluation:
    bits = np.asarray(list(assignment), dtype=np.uint8)
    if bits.size != instance.n:
        raise ValueError(f"assignment has length {bits.size}, instance has n={instance.n}")
    if instance.m == 0:
        return Evaluation(True, None)
    vars_, negs = instance.literal_arrays()
    true_lit = bits[vars_] != negs
    sat = true_lit.any(axis=1)
    if sat.all():
        return Evaluation(True, None)
    return Evaluation(False, int(np.argmin(sat)))


def deduplicate(instance: Instance) -> Instance:
    """Drop repeated clauses, keeping first occurrences in order."""
    _, first = np.unique(instance.ids, return_index=True)
    return Instance(instance.n, instance.ids[np.sort(first)])


# --------------------------------------------------------------------- DIMACS

@dataclass
class DimacsFile:
    instance: Instance
    planted: Assignment | None = None
    comments: list[str] = field(default_factory=list)


def parse_dimacs(text: str, strict: bool = True) -> DimacsFile:
    """Parse DIMACS CNF text holding 3-literal clauses.

    With ``strict`` a clause of width other than 3, a repeated variable or a
    header/clause count mismatch raises :class:`DimacsError`.  Without it such
    clauses are skipped with a warning.  A ``c planted <bits>`` comment is
    returned as the planted assignment.
    """
    n = m_header = None
    planted = None
    comments: list[str] = []
    ids: list[int] = []
    current: list[int] = []

    def close(lineno):
        nonlocal current
        lits, current = current, []
        try:
            if len(lits) != 3:
                raise DimacsError(f"line {lineno}: clause width {len(lits)} != 3")
            if any(abs(x) > n for x in lits):
                raise DimacsError(f"line {lineno}: variable exceeds n={n}")
            try:
                c = canonicalize(*(Literal.from_dimacs(x) for x in lits))
            except ValueError as e:
                raise DimacsError(f"line {lineno}: {e}") from None
        except DimacsError:
            if strict:
                raise
            log.warning("skipping clause %s on line %d", lits, lineno)
            return
        ids.append(clause_to_type_id(c, n))

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        if line.startswith("c"):
            body = line[1:].strip()
            if body.startswith("planted"):
                planted = Assignment.from_string(body.split(None, 1)[1])
            else:
                comments.append(body)
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise DimacsError(f"line {lineno}: bad header {line!r}")
            n, m_header = int(parts[2]), int(parts[3])
            continue
        if n is None:
            raise DimacsError(f"line {lineno}: clause before 'p cnf' header")
        for tok in line.split():
            lit = int(tok)
            if lit == 0:
                close(lineno)
            else:
                current.append(lit)
    if current:
        close("EOF")
    if n is None:
        raise DimacsError("missing 'p cnf' header")
    if m_header != len(ids):
        if strict:
            raise DimacsError(f"header declares {m_header} clauses, found {len(ids)}")
        log.warning("header declares %d clauses, found %d", m_header, len(ids))
    if planted is not None and len(planted) != n:
        raise DimacsError(f"planted assignment has length {len(planted)}, n={n}")
    return DimacsFile(Instance(n, ids), planted, comments)


def format_dimacs(instance: Instance, planted: Assignment | Sequence[int] | None = None,
                  comments: Iterable[str] = ()) -> str:
    buf = io.StringIO()
    for c in comments:
        buf.write(f"c {c}\n")
    if planted is not None:
        if not isinstance(planted, Assignment):
            planted = Assignment(tuple(planted))
        buf.write(f"c planted {planted.to_string()}\n")
    buf.write(f"p cnf {instance.n} {instance.m}\n")
    if instance.m:
        vars_, negs = instance.literal_arrays()
        signed = np.where(negs == 1, -(vars_ + 1), vars_ + 1)
        for row in signed:
            buf.write(f"{row[0]} {row[1]} {row[2]} 0\n")
    return buf.getvalue()


def load_dimacs(path: str | os.PathLike, strict: bool = True) -> DimacsFile:
    with open(path) as fh:
        return parse_dimacs(fh.read(), strict=strict)


def save_dimacs(path: str | os.PathLike, instance: Instance,
                planted: Assignment | Sequence[int] | None = None,
                comments: Iterable[str] = ()) -> None:
    with open(path, "w") as fh:
        fh.write(format_dimacs(instance, planted, comments))
