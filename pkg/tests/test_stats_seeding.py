import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from grasspcp.seeding import check_random_state, child_seed, spawn
from grasspcp.stats import chisquare_uniform, clopper_pearson, fraction_dict, mcdiarmid_half_width


def test_child_seed_is_stable():
    assert child_seed(7, "a") == child_seed(7, "a")
    assert child_seed(7, "a") != child_seed(7, "b")
    assert child_seed(7, "a") != child_seed(8, "a")
    assert 0 <= child_seed(2 ** 70, "x") < 2 ** 64


def test_spawn_from_int_is_reproducible():
    assert spawn(3, "x").random() == spawn(3, "x").random()


def test_check_random_state():
    r = random.Random(1)
    assert check_random_state(r) is r
    assert check_random_state(5).random() == random.Random(5).random()
    with pytest.raises(TypeError):
        check_random_state("seed")


@given(st.integers(0, 200), st.integers(1, 200))
def test_clopper_pearson_contains_estimate(k, extra):
    n = k + extra
    est = clopper_pearson(k, n)
    assert 0 <= est.ci_low <= est.value <= est.ci_high <= 1


def test_clopper_pearson_extremes():
    assert clopper_pearson(0, 10).ci_low == 0.0
    assert clopper_pearson(10, 10).ci_high == 1.0


def test_mcdiarmid_shrinks():
    assert mcdiarmid_half_width(10000) < mcdiarmid_half_width(100)
    assert mcdiarmid_half_width(10000, 0.99) == pytest.approx(0.01628, abs=1e-4)


def test_chisquare_uniform():
    assert chisquare_uniform([100, 100, 100]) == pytest.approx(1.0)
    assert chisquare_uniform([300, 0, 0]) < 1e-6


def test_fraction_dict():
    assert fraction_dict(Fraction(1, 3)) == {"num": 1, "den": 3, "float": 1 / 3}
