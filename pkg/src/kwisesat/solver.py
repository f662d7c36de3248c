"""Exact satisfiability oracles for small instances.

``brute_force`` and ``count_models`` mark, for every clause, the subcube of
assignments it falsifies inside an ``n``-dimensional boolean array (axis
``i`` is variable ``i + 1``, so C order is lexicographic order with the first
variable most significant).  Above ``CHUNK_BITS`` variables the leading
variables are enumerated and the rest handled per chunk.

``dpll`` is a chronological-backtracking DPLL with unit propagation,
pure-literal elimination and most-occurring-variable branching.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Assignment, Instance, evaluate, ids_to_literals

__all__ = ["SolveResult", "brute_force", "dpll", "count_models", "BRUTE_MAX_N", "COUNT_MAX_N"]

BRUTE_MAX_N = 30
COUNT_MAX_N = 26
CHUNK_BITS = 22


@dataclass(frozen=True)
class SolveResult:
    sat: bool
    witness: Assignment | None = None
    decisions: int = 0
    propagations: int = 0
    method: str = ""

    @property
    def verdict(self) -> str:
        return "SAT" if self.sat else "UNSAT"

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "method": self.method,
                "witness": self.witness.to_string() if self.witness else None,
                "decisions": self.decisions, "propagations": self.propagations}


def _chunks(instance: Instance):
    """Yield ``(prefix_value, prefix_bits, alive)`` with falsified assignments cleared."""
    n = instance.n
    vars_, negs = ids_to_literals(instance.ids, n)
    vars_, negs = vars_.tolist(), negs.tolist()
    p = max(0, n - CHUNK_BITS)
    r = n - p
    for prefix in range(1 << p):
        alive = np.ones((2,) * r, dtype=bool) if r else np.ones((), dtype=bool)
        pbits = [(prefix >> (p - 1 - i)) & 1 for i in range(p)]
        for vs, ns in zip(vars_, negs):
            idx = [slice(None)] * r
            live = True
            for v, neg in zip(vs, ns):
                # the clause is falsified where every literal is false: sigma_v == neg
                if v < p:
                    if pbits[v] != neg:
                        live = False
                        break
                else:
                    idx[v - p] = neg
            if live:
                alive[tuple(idx)] = False
        yield prefix, p, alive.reshape(-1)


def _bits(x: int, n: int) -> tuple[int, ...]:
    return tuple((x >> (n - 1 - i)) & 1 for i in range(n))


def brute_force(instance: Instance) -> SolveResult:
    """Lexicographically first satisfying assignment, or UNSAT."""
    n = instance.n
    if n > BRUTE_MAX_N:
        raise ValueError(f"brute force supports n <= {BRUTE_MAX_N}, got {n}")
    for prefix, p, alive in _chunks(instance):
        hit = np.flatnonzero(alive)
        if hit.size:
            x = (prefix << (n - p)) | int(hit[0])
            return SolveResult(True, Assignment(_bits(x, n)), method="brute")
    return SolveResult(False, method="brute")


def count_models(instance: Instance) -> int:
    n = instance.n
    if n > COUNT_MAX_N:
        raise ValueError(f"model counting supports n <= {COUNT_MAX_N}, got {n}")
    return sum(int(alive.sum()) for _, _, alive in _chunks(instance))


def dpll(instance: Instance) -> SolveResult:
    """Complete DPLL search.

    Branches on the unassigned variable with the most occurrences in
    unsatisfied clauses (lowest index on ties), trying its more frequent
    polarity first (false on ties).  Variables left unassigned when every
    clause is satisfied are set to false in the witness.
    """
    n, m = instance.n, instance.m
    if m == 0:
        return SolveResult(True, Assignment((0,) * n), method="dpll")
    vars_, negs = ids_to_literals(instance.ids, n)
    cv = vars_.tolist()
    cn = negs.tolist()
    occ: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for c in range(m):
        for v, neg in zip(cv[c], cn[c]):
            occ[v].append((c, neg))

    val = [-1] * n
    n_true = [0] * m
    n_false = [0] * m
    trail: list[int] = []
    units: list[int] = []
    state = {"sat": 0, "conflict": False}
    decisions = propagations = 0

    def assign(v: int, b: int):
        val[v] = b
        trail.append(v)
        for c, neg in occ[v]:
            if b != neg:
                if n_true[c] == 0:
                    state["sat"] += 1
                n_true[c] += 1
            else:
                n_false[c] += 1
                if n_true[c] == 0:
                    if n_false[c] == 3:
                        state["conflict"] = True
                    elif n_false[c] == 2:
                        units.append(c)

    def undo_to(size: int):
        while len(trail) > size:
            v = trail.pop()
            b = val[v]
            for c, neg in occ[v]:
                if b != neg:
                    n_true[c] -= 1
                    if n_true[c] == 0:
                        state["sat"] -= 1
                else:
                    n_false[c] -= 1
            val[v] = -1
        units.clear()
        state["conflict"] = False

    def propagate() -> bool:
        nonlocal propagations
        while True:
            while units and not state["conflict"]:
                c = units.pop()
                if n_true[c]:
                    continue
                for v, neg in zip(cv[c], cn[c]):
                    if val[v] < 0:
                        assign(v, 1 - neg)
                        propagations += 1
                        break
            if state["conflict"]:
                return False
            # pure literals over unsatisfied clauses
            pol = {}
            for c in range(m):
                if n_true[c]:
                    continue
                for v, neg in zip(cv[c], cn[c]):
                    if val[v] < 0:
                        pol[v] = pol.get(v, 0) | (1 << neg)
            pure = sorted(v for v, mask in pol.items() if mask != 3)
            if not pure:
                return True
            for v in pure:
                assign(v, 0 if pol[v] == 2 else 1)
                propagations += 1

    def choose():
        score = [0] * n
        pos = [0] * n
        for c in range(m):
            if n_true[c]:
                continue
            for v, neg in zip(cv[c], cn[c]):
                if val[v] < 0:
                    score[v] += 1
                    pos[v] += 1 - neg
        best = max(range(n), key=lambda v: (score[v], -v))
        first = 1 if 2 * pos[best] > score[best] else 0
        return best, first

    # decision stack entries: (trail size before decision, var, value, flipped)
    stack: list[tuple[int, int, int, bool]] = []
    while True:
        if propagate():
            if state["sat"] == m:
                bits = tuple(max(b, 0) for b in val)
                sigma = Assignment(bits)
                assert evaluate(instance, sigma).satisfied
                return SolveResult(True, sigma, decisions, propagations, "dpll")
            v, b = choose()
            decisions += 1
            stack.append((len(trail), v, b, False))
            assign(v, b)
            continue
        while stack:
            size, v, b, flipped = stack.pop()
            undo_to(size)
            if not flipped:
                stack.append((size, v, 1 - b, True))
                assign(v, 1 - b)
                break
        else:
            return SolveResult(False, None, decisions, propagations, "dpll")
