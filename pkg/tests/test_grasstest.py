import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from oracles import maximal_clauses_hold, planted_zoom_table
from grasspcp import bilinear, grasstest
from grasspcp.errors import DomainError
from grasspcp.f2la import canonicalize, enumerate_grassmann, full_space, gaussian_binomial, sample_subspace
from grasspcp.grasstest import (LinearFunctional, SubspaceFamily, TablePair, all_functionals,
                                count_hyperedges, find_maximal_pairs, run_consistency_test)


@st.composite
def functional_pairs(draw):
    n = draw(st.integers(2, 6))
    seed = draw(st.integers(0, 2 ** 32))
    rng = random.Random(seed)
    big = sample_subspace(n, draw(st.integers(1, n)), rng)
    small = sample_subspace(n, draw(st.integers(0, big.dim)), rng, within=big)
    return big, small, rng.getrandbits(n), rng


@given(functional_pairs())
def test_restriction_commutes_with_evaluation(data):
    big, small, s, _ = data
    f = LinearFunctional.from_vector(big, s)
    g = f.restrict(small)
    assert all(g(v) == f(v) == bin(s & v).count("1") % 2 for v in small.vectors())


@given(functional_pairs())
def test_extension_restricts_back(data):
    big, small, s, rng = data
    g = LinearFunctional.from_vector(small, s)
    assert g.extend(big, rng).restrict(small) == g
    exts = g.all_extensions(big)
    assert len(set(exts)) == 2 ** (big.dim - small.dim)


@given(functional_pairs())
def test_spanning_values_roundtrip(data):
    big, _, s, _ = data
    f = LinearFunctional.from_vector(big, s)
    pairs = [(v, f(v)) for v in big.vectors()]
    assert LinearFunctional.from_spanning_values(big, pairs) == f


def test_inconsistent_values_raise():
    dom = canonicalize([0b10, 0b01], 2)
    with pytest.raises(DomainError):
        LinearFunctional.from_spanning_values(dom, [(0b10, 1), (0b01, 0), (0b11, 0)])


def test_all_functionals_distinct():
    dom = canonicalize([0b1100, 0b0011, 0b0101], 4)
    fs = all_functionals(dom)
    assert len(set(fs)) == 8


def test_json_roundtrip():
    tp = TablePair.random(4, 2, 1, random.Random(0))
    back = TablePair.from_json(tp.to_json())
    assert back.t1 == tp.t1 and back.t2 == tp.t2


@pytest.mark.parametrize("k", [1, 2])
def test_global_tables_always_pass(k):
    tp = TablePair.from_globals(4, 2, 1, 0b1011)
    assert run_consistency_test(tp, k).probability == 1


def test_mismatched_globals():
    tp = TablePair.from_globals(4, 2, 1, 0b1011, 0b0011)
    want = Fraction(gaussian_binomial(3, 1), gaussian_binomial(4, 1))
    assert run_consistency_test(tp, 1).probability == want
    assert grasstest.two_query_pass_probability(tp) == want


def test_montecarlo_agrees_with_exact():
    tp = TablePair.random(4, 2, 1, random.Random(2))
    exact = run_consistency_test(tp, 2).probability
    mc = run_consistency_test(tp, 2, "montecarlo", 4000, seed=5).estimate
    assert mc.ci_low <= exact <= mc.ci_high


def test_k_must_be_positive():
    tp = TablePair.from_globals(3, 2, 1, 1)
    with pytest.raises(DomainError):
        run_consistency_test(tp, 0)


@pytest.mark.parametrize("seed", range(4))
def test_hyperedge_identity_and_bound(seed):
    rng = random.Random(seed)
    rfam = SubspaceFamily.random(5, 1, 0.5, rng)
    lfam = SubspaceFamily.random(5, 2, 0.5, rng)
    rep = count_hyperedges(rfam, lfam, 2)
    assert rep.identity_holds
    assert rep.inner_product_float == pytest.approx(float(rep.inner_product))
    if rep.asserted:
        assert rep.inequality_holds


def test_hyperedge_extremes():
    full = count_hyperedges(SubspaceFamily.full(5, 1), SubspaceFamily.full(5, 2), 2)
    assert full.probability == 1
    empty = count_hyperedges(SubspaceFamily(5, 1, frozenset()), SubspaceFamily.full(5, 2), 2)
    assert empty.probability == 0 and empty.inner_product == 0


@pytest.mark.parametrize("seed", range(3))
def test_lift_preserves_pseudorandomness(seed):
    fam = SubspaceFamily.random(4, 2, 0.4, random.Random(seed))
    lifted = grasstest.lift_indicator(fam)
    assert lifted.mean() == pytest.approx(float(fam.density) * float(grasstest.prob_all_independent(4, 2, 0, 1)))
    for r in (1, 2):
        eps, _ = grasstest.family_pseudorandomness(fam, r)
        ok, _, _ = bilinear.is_pseudorandom(lifted, r, 2 * eps)
        assert ok


def test_family_density_of_full_family():
    fam = SubspaceFamily.full(4, 2)
    eps, _ = grasstest.family_pseudorandomness(fam, 1)
    assert eps == 1.0


@pytest.mark.parametrize("seed", range(3))
def test_planted_zoom_out_is_recovered(seed):
    t, q, w0, g0 = planted_zoom_table(5, 2, 0, 3, seed)
    pairs = find_maximal_pairs(t, q, 1.0, 0.8, 2, 2)
    assert any(p.w == w0 and p.g == g0 for p in pairs)
    for p in pairs:
        assert maximal_clauses_hold(t, q, p, 1.0, 0.8, 2, 2)


def test_maximal_pairs_on_random_table():
    rng = random.Random(9)
    t = {s: LinearFunctional.from_vector(s, rng.getrandbits(4)) for s in enumerate_grassmann(4, 2)}
    q = sample_subspace(4, 1, rng)
    for p in find_maximal_pairs(t, q, 0.5, 0.5, 2, 2):
        assert maximal_clauses_hold(t, q, p, 0.5, 0.5, 2, 2)


def test_global_table_has_full_space_as_only_top_pair():
    f = 0b10110
    t = {s: LinearFunctional.from_vector(s, f) for s in enumerate_grassmann(5, 2)}
    q = canonicalize([0b10000], 5)
    pairs = find_maximal_pairs(t, q, 1.0, 0.5, 2, 2)
    assert [p.w for p in pairs] == [full_space(5)]


def test_bks_exhaustive_mean():
    tp = TablePair.random(4, 2, 1, random.Random(1))
    rep = grasstest.bks_experiment(tp, 2, exhaustive=True)
    assert rep.mu_SR_matches
    assert rep.mean_mu_SR == Fraction(1, 2)
