import itertools
import random

import pytest
from hypothesis import given, strategies as st

from grasspcp.errors import DomainError, ResourceError
from grasspcp.f2la import (F2Matrix, F2Subspace, ZoomPair, canonicalize, complement_basis, contains,
                           coordinate_mask, coordinate_subspace, enumerate_grassmann, enumerate_zoom,
                           full_space, gaussian_binomial, rank, sample_subspace, sample_superspace,
                           subspace_intersect, subspace_sum, trivial_intersection, zero_subspace)


@st.composite
def subspaces(draw, n=None):
    n = draw(st.integers(1, 7)) if n is None else n
    rows = draw(st.lists(st.integers(0, (1 << n) - 1), max_size=n + 1))
    return canonicalize(rows, n)


@st.composite
def subspace_pairs(draw):
    n = draw(st.integers(1, 7))
    return draw(subspaces(n)), draw(subspaces(n))


def brute_span(rows):
    out = {0}
    for r in rows:
        out |= {x ^ r for x in out}
    return out


def test_gaussian_binomial_small_values():
    assert gaussian_binomial(4, 2) == 35
    assert gaussian_binomial(3, 1) == 7
    assert gaussian_binomial(5, 0) == 1
    with pytest.raises(DomainError):
        gaussian_binomial(5, 6)


def test_rank_of_matrix():
    m = F2Matrix.from_strings(["110", "011", "101"])
    assert rank(m) == 2
    assert rank(F2Matrix.identity(4)) == 4


@pytest.mark.parametrize("n", range(0, 6))
def test_grassmann_enumeration_counts(n):
    for l in range(n + 1):
        subs = list(enumerate_grassmann(n, l))
        assert len(subs) == gaussian_binomial(n, l)
        assert len(set(subs)) == len(subs)
        assert all(s.dim == l for s in subs)


def test_grassmann_cap():
    with pytest.raises(ResourceError):
        list(enumerate_grassmann(6, 3, cap=10))


def test_enumerate_zoom_counts():
    rng = random.Random(0)
    for _ in range(20):
        q = sample_subspace(6, rng.randint(0, 2), rng)
        w = sample_superspace(q, rng.randint(q.dim + 1, 6), rng)
        z = ZoomPair(q, w)
        for l in range(q.dim, w.dim + 1):
            members = list(enumerate_zoom(z, l))
            assert len(members) == z.zoom_count(l)
            assert all(z.admits(s) and s.dim == l for s in members)


def test_zoom_requires_containment():
    q = canonicalize([0b100], 3)
    w = canonicalize([0b010], 3)
    with pytest.raises(DomainError):
        ZoomPair(q, w)


def test_json_roundtrip():
    s = canonicalize([0b1101, 0b0110], 4)
    assert F2Subspace.from_json(s.to_json()) == s


def test_coordinate_subspace():
    s = coordinate_subspace(5, [0, 3])
    assert s.dim == 2
    assert coordinate_mask(5, [0, 3]) == 0b10010
    assert 0b10010 in s and 0b01000 not in s


@given(subspaces())
def test_canonical_form_is_span_invariant(s):
    assert set(s.vectors()) == brute_span(s.basis)
    shuffled = list(s.basis) + [a ^ b for a, b in itertools.combinations(s.basis, 2)]
    assert canonicalize(shuffled, s.ambient_dim) == s


@given(subspace_pairs())
def test_dimension_formula(pair):
    a, b = pair
    assert subspace_sum(a, b).dim + subspace_intersect(a, b).dim == a.dim + b.dim
    assert set(subspace_intersect(a, b).vectors()) == set(a.vectors()) & set(b.vectors())
    assert trivial_intersection(a, b) == (subspace_intersect(a, b).dim == 0)


@given(subspace_pairs())
def test_contains_matches_sets(pair):
    a, b = pair
    assert contains(a, b) == set(b.vectors()).issubset(set(a.vectors()))
    assert contains(a, zero_subspace(a.ambient_dim))
    assert contains(full_space(a.ambient_dim), a)


@given(subspaces())
def test_coordinates_roundtrip(s):
    for c in range(1 << s.dim):
        assert s.coordinates(s.combine(c)) == c


@given(subspace_pairs())
def test_complement_basis_completes(pair):
    a, b = pair
    w = subspace_sum(a, b)
    extra = complement_basis(a, w)
    assert len(extra) == w.dim - a.dim
    assert canonicalize(a.basis + extra, a.ambient_dim) == w


@given(st.integers(0, 2 ** 32))
def test_sample_superspace_contains(seed):
    rng = random.Random(seed)
    r = sample_subspace(6, 2, rng)
    s = sample_superspace(r, 4, rng)
    assert s.dim == 4 and contains(s, r)


def test_sample_subspace_is_uniform():
    rng = random.Random(1)
    counts = {}
    for _ in range(7000):
        s = sample_subspace(3, 1, rng)
        counts[s] = counts.get(s, 0) + 1
    assert len(counts) == 7
    assert min(counts.values()) > 850
