import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from grasspcp import bilinear
from grasspcp.bilinear import (BilinearFn, MatrixZoom, apply_Phi, apply_T, character, constant,
                               fourier_transform, inner, inverse_transform, level_decomposition,
                               level_weights, phi_eigen_bound, phi_eigenvalues, rank_table, restrict)
from grasspcp.errors import DomainError
from grasspcp.f2la import F2Matrix, canonicalize, rank


def span_invariant(n, m, seed):
    """A random boolean function of the column span of M."""
    rng = random.Random(seed)
    labels = {}

    def pred(mat):
        s = canonicalize([mat.column(j) for j in range(m)], n)
        if s not in labels:
            labels[s] = rng.random() < 0.5
        return labels[s]
    return bilinear.from_predicate(n, m, pred)


@st.composite
def tables(draw, max_bits=10):
    n = draw(st.integers(1, 4))
    m = draw(st.integers(1, max(1, min(3, max_bits // n))))
    seed = draw(st.integers(0, 2 ** 32))
    vals = np.random.default_rng(seed).normal(size=1 << (n * m))
    return BilinearFn(n, m, vals)


def test_rank_table_matches_direct_rank():
    ranks = rank_table(3, 2)
    for i in range(64):
        assert ranks[i] == rank(F2Matrix.from_flat_index(i, 3, 2))


def test_character_is_fourier_delta():
    s = F2Matrix.from_strings(["10", "01", "11"])
    fv = fourier_transform(character(s))
    expect = np.zeros(64)
    expect[s.flat_index()] = 1.0
    assert np.allclose(fv.coeffs, expect)


def test_constant_lives_on_level_zero():
    w = level_weights(constant(3, 2, 2.0))
    assert w[0] == pytest.approx(4.0)
    assert sum(w[1:]) == pytest.approx(0.0)


@given(tables())
def test_parseval_and_inversion(f):
    fv = fourier_transform(f)
    assert fv.energy() == pytest.approx(f.norm_sq(), rel=1e-9, abs=1e-9)
    assert np.allclose(inverse_transform(fv).values, f.values, atol=1e-9)


@given(tables())
def test_levels_sum_to_function(f):
    parts = level_decomposition(f)
    assert np.allclose(sum(p.values for p in parts), f.values, atol=1e-9)
    assert sum(p.norm_sq() for p in parts) == pytest.approx(f.norm_sq(), rel=1e-9, abs=1e-9)
    for i in range(len(parts)):
        for j in range(i):
            assert abs(inner(parts[i], parts[j])) < 1e-9


def test_apply_T_is_averaging():
    f = BilinearFn(2, 2, np.arange(16, dtype=float))
    tf = apply_T(f, 1)
    assert tf.m == 1
    assert tf.mean() == pytest.approx(f.mean())
    with pytest.raises(DomainError):
        apply_T(f, 3)


@pytest.mark.parametrize("n,c", [(3, 1), (3, 2), (4, 1)])
def test_phi_acts_diagonally_on_characters(n, c):
    m = 2
    eig = phi_eigenvalues(n, m, c)
    for s in range(1 << (n * m)):
        chi = character(F2Matrix.from_flat_index(s, n, m))
        assert np.allclose(apply_Phi(chi, c).values, float(eig[s]) * chi.values)


@pytest.mark.parametrize("n", [4, 5])
@pytest.mark.parametrize("c", [1, 2])
def test_phi_eigenvalue_bound(n, c):
    ranks = rank_table(n, 2)
    for s, lam in enumerate(phi_eigenvalues(n, 2, c)):
        assert abs(float(lam)) <= phi_eigen_bound(int(ranks[s]), c, n)


def test_phi_eigenvalue_at_zero_is_one():
    assert phi_eigenvalues(3, 2, 1)[0] == Fraction(1)


@pytest.mark.parametrize("seed", range(5))
def test_T_keeps_levels_orthogonal(seed):
    n, m, c = 4, 2, 1
    f = span_invariant(n, m, seed)
    assert bilinear.is_basis_invariant(f)
    parts = level_decomposition(f)
    tparts = [apply_T(p, c) for p in parts]
    for i in range(len(parts)):
        for j in range(i):
            assert abs(inner(tparts[i], tparts[j])) < 1e-9
        bound = phi_eigen_bound(i, c, n)
        assert tparts[i].norm_sq() <= bound * parts[i].norm_sq() + 1e-12


def test_restrict_to_zoom():
    f = BilinearFn(2, 2, np.arange(16, dtype=float))
    z = MatrixZoom(2, 2, ins=((0b01, 0b11),))
    r = restrict(f, z)
    assert r.size == 4
    for idx in r.members:
        mat = F2Matrix.from_flat_index(int(idx), 2, 2)
        assert mat.column(1) == 0b11
    bad = MatrixZoom(2, 2, ins=((0b01, 0b11), (0b01, 0b00)))
    assert restrict(f, bad) is None


def test_json_roundtrip_boolean():
    f = bilinear.random_boolean(3, 2, np.random.default_rng(0))
    g = BilinearFn.from_json(f.to_json())
    assert np.array_equal(f.values, g.values)
