import itertools
import warnings
from collections import Counter
from fractions import Fraction
from math import comb

import numpy as np
import pytest

from kwisesat.core import Clause, Instance, Literal, deduplicate, num_types
from kwisesat.generators import GeneratorSpec, make_rng, sample
from kwisesat.refutation import (FourClauseCase, RegimeWarning, Statistic, Verdict,
                                 build_literal_graph, classify_four_clauses, count_k22_bruteforce,
                                 kappa, kappa_bounds, kappa_expectation_terms, kappa_multigraph,
                                 refute_by_kappa, refute_by_xi, tilde_m_fourth_moment_mc,
                                 tilde_m_moment_bound, xi, xi_expectation, xi_sat_threshold,
                                 xi_universal_lower_bound)
from kwisesat.solver import brute_force


def _edges(instance):
    """Literal-graph edges as a multiset of (frozenset left pair, right literal)."""
    e = Counter()
    for c in instance.clauses:
        lits = [(x.var, x.neg) for x in c]
        for r in range(3):
            e[(frozenset(lits[:r] + lits[r + 1:]), lits[r])] += 1
    return e


def k22_by_definition(instance, multigraph):
    e = _edges(instance)
    left = sorted({u for u, _ in e}, key=sorted)
    right = sorted({v for _, v in e})
    total = 0
    for u1, u2 in itertools.combinations(left, 2):
        for v1, v2 in itertools.combinations(right, 2):
            ws = [e.get((u, v), 0) for u in (u1, u2) for v in (v1, v2)]
            if all(ws):
                total += int(np.prod(ws)) if multigraph else 1
    return total


def _lit(r):
    """Right-node index to (1-based variable, negated)."""
    return (r // 2 + 1, r % 2)


def _random_instance(rng, n, m):
    return Instance(n, rng.integers(0, num_types(n), m))


# -------------------------------------------------------------------- xi

def test_xi_counts_pairs(rng):
    for _ in range(50):
        inst = _random_instance(rng, 4, int(rng.integers(0, 40)))
        brute = sum(a == b for a, b in itertools.combinations(inst.ids.tolist(), 2))
        assert xi(inst) == brute


def test_xi_expectation_is_pairs_over_M():
    for n, m in ((4, 9), (5, 30), (7, 2)):
        M = num_types(n)
        assert xi_expectation(n, m) == Fraction(comb(m, 2), M)
    assert xi_expectation(4, 9) == Fraction(9, 8)


def test_xi_expectation_exact_enumeration():
    # n=3 has M=8 types; enumerate every sequence of m=3 types
    M = 8
    total = sum(sum(a == b for a, b in itertools.combinations(t, 2))
                for t in itertools.product(range(M), repeat=3))
    assert Fraction(total, M**3) == xi_expectation(3, 3)


def test_xi_universal_bound_holds(rng):
    for _ in range(300):
        n = int(rng.integers(3, 6))
        inst = _random_instance(rng, n, int(rng.integers(1, 200)))
        assert xi(inst) >= xi_universal_lower_bound(n, inst.m)


def test_xi_threshold_holds_on_satisfiable(rng):
    checked = 0
    for _ in range(400):
        n = int(rng.integers(3, 6))
        inst = _random_instance(rng, n, int(rng.integers(1, 40)))
        if brute_force(inst).sat:
            checked += 1
            assert xi(inst) >= xi_sat_threshold(n, inst.m)
            assert refute_by_xi(inst) is None
    assert checked > 50


def test_xi_certificate_on_all_types_of_one_triple():
    inst = Instance(3, range(8))   # all sign patterns on one triple: UNSAT
    cert = refute_by_xi(inst)
    assert cert is not None and cert.verdict is Verdict.UNSAT and cert.statistic is Statistic.XI
    assert cert.value == 0 and cert.threshold == Fraction(4, 7)
    assert not brute_force(inst).sat
    assert cert.to_json()["threshold"] == "4/7"


# ------------------------------------------------------------------ kappa

def test_literal_graph_shape_and_degrees(rng):
    inst = _random_instance(rng, 6, 50)
    g = build_literal_graph(inst)
    assert g.num_left == 4 * comb(6, 2) and g.num_right == 12
    assert g.total_multiplicity() == 3 * inst.m
    ref = _edges(inst)
    for (u, v), w in g.edges().items():
        a, b = g.left_literals(u)
        key = (frozenset({_lit(a), _lit(b)}), _lit(v))
        assert ref[key] == w == g.multiplicity(u, v)


@pytest.mark.parametrize("n, m", [(4, 5), (4, 30), (5, 60), (6, 120)])
def test_kappa_matches_definition(rng, n, m):
    for _ in range(5):
        inst = _random_instance(rng, n, m)
        red = deduplicate(inst)
        assert kappa(inst) == kappa(red) == k22_by_definition(red, False) == count_k22_bruteforce(red)
        assert kappa_multigraph(inst) == k22_by_definition(inst, True) == count_k22_bruteforce(inst)


def test_kappa_equals_sum_over_four_subsets():
    n = 4
    full = Instance(n, range(num_types(n)))
    cases = Counter(classify_four_clauses(*q) for q in itertools.combinations(full.clauses, 4))
    # derived by exhaustive classification of all 4-subsets of the 32 types
    assert cases[FourClauseCase.CASE_ONE] == 168
    assert cases[FourClauseCase.CASE_TWO] == 120
    assert kappa(full) == 168 + 2 * 120 == 408


def test_classifier_agrees_with_k22_count(rng):
    n = 5
    M = num_types(n)
    for _ in range(3000):
        ids = rng.choice(M, 4, replace=False)
        inst = Instance(n, ids)
        assert classify_four_clauses(*inst.clauses).k22_count == k22_by_definition(inst, False)


def test_classifier_examples():
    L = Literal
    a, b, c, d, e, f = (L(i, 0) for i in range(1, 7))
    c1 = Clause(a, b, c)
    c2 = Clause(a, b, d)
    c4 = Clause(d, e, f)
    c3 = Clause(c, e, f)     # (c1 - c2) | (c4 - c2)
    assert classify_four_clauses(c1, c2, c3, c4) is FourClauseCase.CASE_ONE
    assert classify_four_clauses(c1, c1, c3, c4) is FourClauseCase.CASE_THREE
    # shared literal a in c1, c4 and c2; c2 overlaps both in two literals
    c1, c2, c4 = Clause(a, b, c), Clause(a, b, d), Clause(a, d, e)
    c3 = Clause(a, c, e)
    assert classify_four_clauses(c1, c2, c3, c4) is FourClauseCase.CASE_TWO
    assert classify_four_clauses(c4, c3, c2, c1) is FourClauseCase.CASE_TWO


def test_kappa_bounds_hold(rng):
    for _ in range(200):
        n = int(rng.integers(3, 8))
        inst = _random_instance(rng, n, int(rng.integers(1, 500)))
        red = deduplicate(inst)
        assert kappa(red) >= kappa_bounds(n, red.m).universal_lower


def test_kappa_sat_bound_on_satisfiable(rng):
    checked = 0
    for _ in range(200):
        n = int(rng.integers(4, 9))
        spec = GeneratorSpec("pairwise", n, seed=int(rng.integers(1 << 30)))
        g = sample(spec)
        red = deduplicate(g.instance)
        if brute_force(g.instance).sat:
            checked += 1
            assert kappa(red) >= kappa_bounds(n, red.m).sat_lower
    assert checked > 150


def test_kappa_expectation_below_upper_bound():
    # E[kappa_multi] over m iid types = C(m,4) * 24 * kappa(all types) / M^4
    for n in (5, 6, 8):
        full = Instance(n, range(num_types(n)))
        kf = kappa(full)
        M = num_types(n)
        for m in (10, 100, 1000):
            exp = Fraction(comb(m, 4) * 24 * kf, M**4)
            assert exp <= kappa_bounds(n, m).expectation_upper


def test_kappa_multigraph_expectation_monte_carlo():
    n, m = 4, 12
    M = num_types(n)
    exact = Fraction(comb(m, 4) * 24 * 408, M**4)
    rng = make_rng(11)
    vals = [kappa_multigraph(Instance(n, rng.integers(0, M, m))) for _ in range(6000)]
    se = np.std(vals, ddof=1) / np.sqrt(len(vals))
    assert abs(np.mean(vals) - float(exact)) < 5 * se


def test_refute_by_kappa_vacuous_threshold():
    inst = Instance(4, range(32))
    assert kappa_bounds(4, 32).sat_lower < 0
    assert refute_by_kappa(inst) is None


def test_expectation_terms():
    t = kappa_expectation_terms(10)
    assert t["regime_ok"]
    assert t["p1_upper"] == Fraction(3, 51200)       # 243 / 4147200
    assert t["p1_upper"] <= t["p1_simplified"]
    assert t["p2_upper"] <= t["p2_simplified"]
    for n in (10, 12):
        t = kappa_expectation_terms(n)
        full = Instance(n, range(num_types(n)))
        M = num_types(n)
        assert Fraction(24 * kappa(full), M**4) <= t["p1_upper"] + 2 * t["p2_upper"]
    with pytest.warns(RegimeWarning):
        assert not kappa_expectation_terms(6)["regime_ok"]


def test_moment_bound_and_warning():
    assert tilde_m_moment_bound(10, 100) == Fraction(10**8) - Fraction(125, 6) * 10**6 * 100
    with pytest.warns(RegimeWarning):
        tilde_m_moment_bound(3, 100)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        tilde_m_moment_bound(10, 1000)


def test_moment_bound_monte_carlo():
    spec = GeneratorSpec("ind", 8, 200)
    mean, se = tilde_m_fourth_moment_mc(spec, 300, make_rng(4))
    assert mean + 4 * se >= float(tilde_m_moment_bound(8, 200))
