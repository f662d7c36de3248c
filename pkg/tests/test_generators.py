from collections import Counter
from fractions import Fraction
from math import comb, factorial

import numpy as np
import pytest
from scipy import stats

from kwisesat.core import evaluate, num_triples, num_types
from kwisesat.generators import (GeneratorSpec, Model, gen_independent, gen_pairwise,
                                 gen_threewise, gen_univar, make_rng, sample,
                                 sample_batch_ids, sample_parity_signs)

# sign words: bit i set means literal i is negated
ODD_TRUE_ALL_FALSE = {0b001, 0b010, 0b100, 0b111}   # (-,+,+) (+,-,+) (+,+,-) (-,-,-)
ODD_TRUE_FIRST_TRUE = {0b000, 0b011, 0b101, 0b110}  # (+,+,+) (-,-,+) (-,+,-) (+,-,-)


def chi2_uniform_p(counts):
    counts = np.asarray(counts, dtype=float)
    exp = counts.sum() / counts.size
    return stats.chi2.sf(((counts - exp) ** 2 / exp).sum(), counts.size - 1)


@pytest.mark.parametrize("sigma3, support", [((0, 0, 0), ODD_TRUE_ALL_FALSE),
                                             ((1, 0, 0), ODD_TRUE_FIRST_TRUE)])
def test_parity_signs_support_and_uniformity(sigma3, support):
    rng = make_rng(1)
    c = Counter(sample_parity_signs(sigma3, rng) for _ in range(40000))
    assert set(c) == support
    assert chi2_uniform_p([c[w] for w in sorted(support)]) > 1e-3


def test_parity_signs_always_satisfied():
    rng = make_rng(2)
    for bits in range(8):
        s3 = [(bits >> i) & 1 for i in range(3)]
        for _ in range(50):
            w = sample_parity_signs(s3, rng)
            true = sum(((w >> i) & 1) != s3[i] for i in range(3))
            assert true in (1, 3)


def test_parity_zero_flips_support():
    rng = make_rng(3)
    got = {sample_parity_signs((0, 0, 0), rng, parity=0) for _ in range(2000)}
    assert got == {0b000, 0b011, 0b101, 0b110}


def test_independent_small_laws():
    assert GeneratorSpec("ind", 3, 1).num_types == 8
    rng = make_rng(4)
    ids = np.array([gen_independent(3, 1, rng).ids[0] for _ in range(16000)])
    assert chi2_uniform_p(np.bincount(ids, minlength=8)) > 1e-3


def test_independent_rejects_small_n():
    with pytest.raises(ValueError):
        gen_independent(2, 1, make_rng(0))


def test_univar_shares_triple():
    rng = make_rng(5)
    for _ in range(50):
        inst = gen_univar(7, 9, rng)
        assert len(set((inst.ids >> 3).tolist())) == 1


def test_univar_all_patterns_probability():
    # all 8 sign words among 8 i.i.d. uniform draws: 8!/8^8
    p = factorial(8) / 8**8
    T = 100_000
    rng = make_rng(6)
    hits = sum(len(set((gen_univar(3, 8, rng).ids & 7).tolist())) == 8 for _ in range(T))
    assert abs(hits / T - p) < 4 * np.sqrt(p * (1 - p) / T)


def test_pairwise_branch_structure():
    rng = make_rng(7)
    n = 6
    N = num_triples(n)
    seen = Counter()
    for _ in range(400):
        g = sample(GeneratorSpec("pairwise", n), rng)
        assert g.instance.m == N
        seen[g.branch] += 1
        if g.branch == "planted":
            assert sorted((g.instance.ids >> 3).tolist()) == list(range(N))
            assert evaluate(g.instance, g.planted).satisfied
        else:
            assert g.planted is None
    assert seen["planted"] > 350


def test_pairwise_forces_m():
    assert GeneratorSpec("pairwise", 5).m == 10
    with pytest.raises(ValueError):
        GeneratorSpec("pairwise", 5, 9)


def test_threewise_weights():
    s = GeneratorSpec("threewise", 6, 6)
    assert s.p == Fraction(19, 80)
    assert s.q == Fraction(1, 400)
    d = GeneratorSpec("threewise", 6, 6, weights="display")
    assert d.p == Fraction(59, 240)
    assert sum(w for w, _ in s.branches()) == 1


def test_threewise_weight_bound():
    # p + q <= 1/3 + O(n^-6) in the allowed range
    for n in (9, 12, 20):
        N = num_triples(n)
        m = 2 * (N // 6)
        s = GeneratorSpec("threewise", n, m)
        assert s.p + s.q <= Fraction(1, 3) + Fraction(1, N * N)


@pytest.mark.parametrize("m", [5, 8, 0])
def test_threewise_preconditions(m):
    with pytest.raises(ValueError):
        GeneratorSpec("threewise", 6, m)


def test_threewise_branch_structure():
    rng = make_rng(8)
    n, m = 9, 12
    laws = Counter()
    for _ in range(3000):
        g = sample(GeneratorSpec("threewise", n, m), rng)
        laws[g.branch] += 1
        tr = Counter((g.instance.ids >> 3).tolist())
        if g.branch == "planted":
            assert len(tr) == m
            assert evaluate(g.instance, g.planted).satisfied
        elif g.branch == "paired":
            assert len(tr) == m // 2 and set(tr.values()) == {2}
        else:
            assert len(tr) == 1
    assert laws["paired"] > 0


def test_seed_reproducible():
    s = GeneratorSpec("threewise", 9, 10, seed=42)
    assert sample(s).instance == sample(s).instance
    assert sample(s).instance != sample(GeneratorSpec("threewise", 9, 10, seed=43)).instance


def test_substreams_differ():
    a = make_rng(1, 0).integers(0, 2**62, 4)
    b = make_rng(1, 1).integers(0, 2**62, 4)
    assert not np.array_equal(a, b)


def test_wrappers():
    rng = make_rng(9)
    assert gen_pairwise(5, rng).m == 10
    assert gen_threewise(9, 4, rng).m == 4


@pytest.mark.parametrize("spec", [GeneratorSpec("ind", 5, 4), GeneratorSpec("pairwise", 5),
                                  GeneratorSpec("univar", 5, 4)])
def test_single_clause_marginal_uniform(spec):
    """10^6 samples at n=5, chi-square at significance 1e-3."""
    ids = sample_batch_ids(spec, 10**6, make_rng(10), [0])[:, 0]
    assert chi2_uniform_p(np.bincount(ids, minlength=num_types(5))) > 1e-3


def test_single_clause_marginal_uniform_threewise():
    # the smallest n admitting a 3-wise instance with m >= 2 is 6
    spec = GeneratorSpec("threewise", 6, 6)
    ids = sample_batch_ids(spec, 10**6, make_rng(11), [3])[:, 0]
    assert chi2_uniform_p(np.bincount(ids, minlength=num_types(6))) > 1e-3


@pytest.mark.parametrize("spec, pos", [(GeneratorSpec("threewise", 6, 6), [0, 4]),
                                       (GeneratorSpec("pairwise", 4), [1, 2]),
                                       (GeneratorSpec("univar", 4, 3), [0, 2])])
def test_batch_sampler_matches_sample(spec, pos):
    """Two-sample chi-square on (same triple?, parity of the two sign words)."""
    def feature(ids):
        same = (ids[:, 0] >> 3) == (ids[:, 1] >> 3)
        pop = np.array([0, 1, 1, 2, 1, 2, 2, 3])
        par = (pop[ids[:, 0] & 7] + pop[ids[:, 1] & 7]) & 1
        return same * 2 + par
    rng = make_rng(12)
    a = np.bincount(feature(sample_batch_ids(spec, 200_000, rng, pos)), minlength=4)
    b = np.bincount(feature(np.array([sample(spec, rng).instance.ids[pos] for _ in range(20000)])),
                    minlength=4)
    keep = (a + b) > 0
    _, p, _, _ = stats.chi2_contingency(np.stack([a[keep], b[keep]]))
    assert p > 1e-3
