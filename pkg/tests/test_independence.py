"""Independence checks against oracles that do not share code with the checker.

* ``enumerate_joint`` walks the generator's randomness literally (branch,
  injection of positions into triples, planted bits, sign words) for tiny
  parameters and tallies the joint law of two clause positions.
* Perfect matchings are enumerated outright to check the doubled branch's
  pattern probabilities.
* Direct per-tuple sweeps bypass the classification kernel.
"""

import itertools
from collections import defaultdict
from fractions import Fraction
from math import perm

import numpy as np
import pytest

from kwisesat.core import num_triples, num_types, triple_table
from kwisesat.generators import GeneratorSpec, make_rng, sample_batch_ids
from kwisesat.independence import (exact_joint_probability, matching_pattern_probability,
                                   test_kwise_empirical, verify_kwise_exact)


def _words_for(sigma3, parity):
    s = sum(sigma3)
    return [w for w in range(8) if (bin(w).count("1") + s) % 2 == parity]


def enumerate_joint(spec, positions):
    """Exact law of the clauses at two positions by walking all randomness."""
    n, m = spec.n, spec.m
    N = num_triples(n)
    T = triple_table(n)
    law = defaultdict(Fraction)
    i, j = positions
    for weight, branch in spec.branches():
        if weight == 0:
            continue
        if branch == "planted":
            injections = list(itertools.permutations(range(N), m)) if m == N else None
            if injections is None:
                # only positions i and j matter: ordered distinct pairs are uniform
                injections = [{i: a, j: b} for a, b in itertools.permutations(range(N), 2)]
            else:
                injections = [dict(enumerate(inj)) for inj in injections]
            sigmas = list(itertools.product((0, 1), repeat=n))
            w0 = weight / (len(injections) * len(sigmas))
            for inj in injections:
                ta, tb = inj[i], inj[j]
                for sigma in sigmas:
                    wa = _words_for([sigma[v] for v in T[ta]], spec.parity)
                    wb = _words_for([sigma[v] for v in T[tb]], spec.parity)
                    for x in wa:
                        for y in wb:
                            law[(ta * 8 + x, tb * 8 + y)] += w0 / 16
        elif branch == "paired":
            assert m == 2
            for t in range(N):
                for x in range(8):
                    for y in range(8):
                        law[(t * 8 + x, t * 8 + y)] += weight / (N * 64)
        elif branch == "univar":
            for t in range(N):
                for x in range(8):
                    for y in range(8):
                        law[(t * 8 + x, t * 8 + y)] += weight / (N * 64)
    return law


@pytest.mark.parametrize("spec, positions", [
    (GeneratorSpec("pairwise", 4), (0, 1)),
    (GeneratorSpec("pairwise", 4), (3, 1)),
    (GeneratorSpec("threewise", 6, 2), (0, 1)),
])
def test_enumeration_oracle_two_wise(spec, positions):
    law = enumerate_joint(spec, positions)
    M = spec.num_types
    assert sum(law.values()) == 1
    assert len(law) == M * M
    assert set(law.values()) == {Fraction(1, M * M)}
    rng = np.random.default_rng(0)
    for _ in range(300):
        a, b = (int(x) for x in rng.integers(0, M, 2))
        assert exact_joint_probability(spec, positions, (a, b)) == law[(a, b)]


def test_pairwise_identical_targets():
    assert exact_joint_probability(GeneratorSpec("pairwise", 4), (0, 1), (5, 5)) == Fraction(1, 1024)


def test_independent_model_is_product():
    s = GeneratorSpec("ind", 5, 7)
    assert exact_joint_probability(s, (1, 4, 6), (0, 0, 79)) == Fraction(1, 80**3)


def _all_matchings(items):
    if not items:
        yield []
        return
    a = items[0]
    for i in range(1, len(items)):
        rest = items[1:i] + items[i + 1:]
        for mt in _all_matchings(rest):
            yield [(a, items[i])] + mt


@pytest.mark.parametrize("m", [4, 6, 8])
def test_matching_pattern_by_enumeration(m):
    matchings = list(_all_matchings(list(range(m))))
    for k in range(1, min(4, m) + 1):
        for pos in itertools.combinations(range(m), k):
            tally = defaultdict(int)
            for mt in matchings:
                pairs = frozenset(frozenset((pos.index(a), pos.index(b)))
                                  for a, b in mt if a in pos and b in pos)
                tally[pairs] += 1
            for pairs, c in tally.items():
                got = matching_pattern_probability([tuple(p) for p in pairs], k, m)
                assert got == Fraction(c, len(matchings))


def test_planted_three_distinct_triples_are_uniform():
    # three distinct triples always give a full-rank parity system, so the
    # planted branch alone is uniform on them: 1 / ((N)_3 8^3)
    spec = GeneratorSpec("pairwise", 6)
    N = num_triples(6)
    only_planted = (1 - spec.q)
    rng = np.random.default_rng(1)
    for _ in range(200):
        ranks = rng.choice(N, 3, replace=False)
        words = rng.integers(0, 8, 3)
        got = exact_joint_probability(spec, (0, 1, 2), ranks * 8 + words)
        assert got == only_planted / (perm(N, 3) * 512)


@pytest.mark.parametrize("spec, k", [(GeneratorSpec("pairwise", 4), 2),
                                     (GeneratorSpec("pairwise", 4), 3),
                                     (GeneratorSpec("threewise", 6, 6), 2)])
def test_direct_sweep_without_kernel(spec, k):
    M = spec.num_types
    total = Fraction(0)
    dev = Fraction(0)
    for tup in itertools.product(range(M), repeat=k):
        p = exact_joint_probability(spec, range(k), tup)
        total += p
        dev = max(dev, abs(p - Fraction(1, M**k)))
    assert total == 1
    if k == 2:
        assert dev == 0
    else:
        assert dev > 0


def test_kernel_sweep_matches_direct_sweep_negative():
    spec = GeneratorSpec("pairwise", 4)
    M = 32
    direct = max(abs(exact_joint_probability(spec, (0, 1, 2), t) - Fraction(1, M**3))
                 for t in itertools.product(range(M), repeat=3))
    assert verify_kwise_exact(spec, 3).worst_deviation == direct


def test_marginal_consistency_exhaustive():
    for spec in (GeneratorSpec("pairwise", 4), GeneratorSpec("threewise", 6, 2)):
        M = spec.num_types
        for a in range(M):
            s = sum(exact_joint_probability(spec, (0, 1), (a, b)) for b in range(M))
            assert s == exact_joint_probability(spec, (0,), (a,)) == Fraction(1, M)


def test_exact_is_position_free_and_sampler_is_exchangeable():
    spec = GeneratorSpec("threewise", 6, 6)
    t = (17, 17, 40)
    p = exact_joint_probability(spec, (0, 1, 2), t)
    for pos in itertools.permutations((5, 2, 3)):
        assert exact_joint_probability(spec, pos, t) == p
    # sampler: collision rate of two positions is the same for every pair
    ids = sample_batch_ids(spec, 400_000, make_rng(3))
    same = [((ids[:, a] >> 3) == (ids[:, b] >> 3)).mean() for a, b in itertools.combinations(range(6), 2)]
    N = num_triples(6)
    se = np.sqrt((1 / N) * (1 - 1 / N) / 400_000)
    assert max(abs(s - 1 / N) for s in same) < 5 * se


def test_verify_all_positions():
    rep = verify_kwise_exact(GeneratorSpec("threewise", 6, 4), 2, "all")
    assert rep.verdict and rep.details["position_sets"] == 6


def test_model2_exact_pass():
    for n in (4, 5):
        rep = verify_kwise_exact(GeneratorSpec("pairwise", n), 2)
        assert rep.verdict and rep.worst_deviation == 0


def test_model3_exact_pass_both_parities():
    for parity in (1, 0):
        rep = verify_kwise_exact(GeneratorSpec("threewise", 6, 6, parity=parity), 3)
        assert rep.verdict and rep.worst_deviation == 0


def test_model2_not_three_wise():
    rep = verify_kwise_exact(GeneratorSpec("pairwise", 5), 3)
    assert not rep.verdict
    # three clauses on one triple: q / N / 8^3 = 1/51200 against 1/512000
    assert rep.worst_deviation == Fraction(9, 512000)
    assert len(set(t >> 3 for t in rep.worst_tuple["targets"])) == 1


def test_display_weights_break_independence():
    spec = GeneratorSpec("threewise", 6, 6, weights="display")
    N = 20
    # two clauses on one triple: the doubled branch contributes p/(m-1)/N, which
    # exceeds 1/N^2 - 1/N^3 by 2/(3N^3); divided over 64 sign pairs
    assert verify_kwise_exact(spec, 2).worst_deviation == Fraction(2, 3 * N**3 * 64)
    # exactly two of three equal: (p/(m-1)) / (N (N-1) 512) vs 1/(512 N^3)
    assert verify_kwise_exact(spec, 3).worst_deviation == Fraction(2, 3 * (N - 1) * 512 * N**3)


def test_budget_guard():
    with pytest.raises(ValueError):
        verify_kwise_exact(GeneratorSpec("ind", 10, 4), 3, budget=10**6)


def test_k_out_of_range():
    with pytest.raises(ValueError):
        exact_joint_probability(GeneratorSpec("ind", 4, 6), range(5), [0] * 5)
    with pytest.raises(ValueError):
        exact_joint_probability(GeneratorSpec("ind", 4, 2), (0, 0), (1, 1))


def test_report_json_rationals():
    d = verify_kwise_exact(GeneratorSpec("pairwise", 5), 3).to_json()
    assert d["worst_deviation"] == "9/512000" and d["verdict"] == "fail"


def test_parallel_sweep_matches_serial():
    spec = GeneratorSpec("pairwise", 5)
    a = verify_kwise_exact(spec, 3, jobs=1)
    b = verify_kwise_exact(spec, 3, jobs=3)
    assert a.worst_deviation == b.worst_deviation and a.worst_tuple == b.worst_tuple


def test_python_backend_sweep():
    for spec, k in ((GeneratorSpec("pairwise", 4), 2), (GeneratorSpec("threewise", 6, 6), 2)):
        rep = verify_kwise_exact(spec, k, backend="python")
        assert rep.verdict and rep.details["backend"] == "python"


def test_empirical_independent_passes():
    rep = test_kwise_empirical(GeneratorSpec("ind", 4, 2), 2, 10**7, make_rng(5))
    assert rep.verdict and rep.mode == "empirical" and rep.trials == 10**7


def test_empirical_model2_three_wise_fails():
    rep = test_kwise_empirical(GeneratorSpec("pairwise", 5), 3, 10**6, make_rng(6))
    assert not rep.verdict


def test_empirical_univar_fails():
    rep = test_kwise_empirical(GeneratorSpec("univar", 5, 3), 2, 10**5, make_rng(7))
    assert not rep.verdict


@pytest.mark.parametrize("spec", [GeneratorSpec("pairwise", 4), GeneratorSpec("threewise", 6, 6)])
def test_empirical_cells_agree_with_exact(spec):
    T = 10**6
    M = spec.num_types
    ids = sample_batch_ids(spec, T, make_rng(8), [0, 1])
    counts = np.bincount(ids[:, 0] * M + ids[:, 1], minlength=M * M)
    p = 1 / (M * M)  # the exact law is uniform here
    z = np.abs(counts / T - p) / np.sqrt(p * (1 - p) / T)
    assert z.max() < 5


def test_empirical_patterns_agree_with_exact_model2_k3():
    # collapse 3-tuples to their triple-equality pattern; compare with exact mass
    spec = GeneratorSpec("pairwise", 5)
    T = 10**6
    ids = sample_batch_ids(spec, T, make_rng(9), [0, 1, 2]) >> 3
    allsame = ((ids[:, 0] == ids[:, 1]) & (ids[:, 1] == ids[:, 2])).mean()
    some = ((ids[:, 0] == ids[:, 1]) | (ids[:, 1] == ids[:, 2]) | (ids[:, 0] == ids[:, 2])).mean()
    q = float(spec.q)
    assert abs(allsame - q) < 5 * np.sqrt(q * (1 - q) / T)
    assert abs(some - q) < 5 * np.sqrt(q * (1 - q) / T)


@pytest.mark.parametrize("spec", [GeneratorSpec("pairwise", 4), GeneratorSpec("pairwise", 5),
                                  GeneratorSpec("threewise", 5, 2), GeneratorSpec("threewise", 6, 4)])
def test_exchangeability_random_position_sets(spec):
    rng = np.random.default_rng(spec.n * 100 + spec.m)
    M = spec.num_types
    for _ in range(40):
        k = int(rng.integers(2, min(3, spec.m) + 1))
        pos = [int(x) for x in rng.choice(spec.m, k, replace=False)]
        t = [int(x) for x in rng.integers(0, M, k)]
        if rng.random() < 0.5:
            t[-1] = t[0] ^ int(rng.integers(0, 8))     # same triple, often
        p = exact_joint_probability(spec, pos, t)
        for perm_ in itertools.permutations(range(k)):
            q = exact_joint_probability(spec, [pos[i] for i in perm_], [t[i] for i in perm_])
            assert q == p
            assert exact_joint_probability(spec, sorted(pos), t) == p
