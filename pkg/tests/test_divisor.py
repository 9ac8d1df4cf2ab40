import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdmoments.core_arith import CongruenceSpec
from cdmoments.divisor import (class_count, counting_limit, delta, delta_many, eval_F12, eval_F21, main_term,
                               main_term_coefficients, sieve_divisor_table, summatory_hyperbola,
                               summatory_hyperbola_many)
from cdmoments.errors import InvalidArgument, ResourceLimit

CLASSICAL = CongruenceSpec(1, 1, 1, 1)


@st.composite
def specs(draw, max_modulus=6):
    m1 = draw(st.integers(1, max_modulus))
    m2 = draw(st.integers(1, max_modulus))
    return CongruenceSpec(draw(st.integers(1, m1)), m1, draw(st.integers(1, m2)), m2)


def brute_counts(spec, limit):
    counts = [0] * (limit + 1)
    for n1 in range(spec.l1, limit + 1, spec.m1):
        for n2 in range(spec.l2, limit // n1 + 1, spec.m2):
            counts[n1 * n2] += 1
    return counts


@pytest.mark.parametrize("spec", [CLASSICAL, CongruenceSpec(1, 2, 1, 2), CongruenceSpec(2, 2, 1, 2),
                                  CongruenceSpec(1, 3, 2, 4), CongruenceSpec(5, 6, 3, 5)])
def test_sieve_matches_double_loop(spec):
    assert sieve_divisor_table(spec, 2000).counts.tolist() == brute_counts(spec, 2000)


def test_frozen_divisor_values():
    assert sieve_divisor_table(CLASSICAL, 10).counts[6] == 4
    assert sieve_divisor_table(CongruenceSpec(1, 2, 1, 2), 20).counts[15] == 4
    assert sieve_divisor_table(CongruenceSpec(2, 2, 1, 2), 10).counts[6] == 2
    assert summatory_hyperbola(CLASSICAL, 10) == 27
    assert summatory_hyperbola(CLASSICAL, 100) == 482


@settings(max_examples=60, deadline=None)
@given(specs(), st.integers(1, 20000))
def test_hyperbola_matches_sieve_prefix(spec, X):
    assert summatory_hyperbola(spec, X) == int(sieve_divisor_table(spec, X).prefix()[X])


@settings(max_examples=20, deadline=None)
@given(specs(), st.lists(st.integers(1, 10**6), min_size=1, max_size=50))
def test_vectorized_hyperbola_matches_scalar(spec, limits):
    assert summatory_hyperbola_many(spec, limits).tolist() == [summatory_hyperbola(spec, X) for X in limits]


@given(st.integers(0, 500), st.integers(1, 12), st.data())
def test_class_count(limit, modulus, data):
    residue = data.draw(st.integers(1, modulus))
    assert class_count(limit, residue, modulus) == sum(1 for n in range(1, limit + 1) if n % modulus == residue % modulus)


@pytest.mark.parametrize("spec", [CLASSICAL, CongruenceSpec(1, 3, 2, 4), CongruenceSpec(2, 5, 1, 3)])
def test_main_term_coefficients_against_mpmath(spec):
    coef = main_term_coefficients(spec)
    g1 = -mpmath.digamma(mpmath.mpf(spec.l1) / spec.m1)
    g2 = -mpmath.digamma(mpmath.mpf(spec.l2) / spec.m2)
    const = mpmath.zeta(0, mpmath.mpf(spec.l1) / spec.m1) * mpmath.zeta(0, mpmath.mpf(spec.l2) / spec.m2)
    assert coef.c_log == 1.0
    assert coef.c_lin == pytest.approx(float(g1 + g2 - 1), abs=1e-13)
    assert coef.c_const == pytest.approx(float(const), abs=1e-15)


def test_classical_delta_at_100_is_frozen():
    # 482 pairs up to 100; main term 100 log 100 + (2 gamma - 1) 100 + 1/4
    oracle = 482 - (100 * math.log(100) + (2 * float(mpmath.euler) - 1) * 100 + 0.25)
    assert delta(CLASSICAL, 100) == pytest.approx(oracle, abs=1e-11)
    assert delta(CLASSICAL, 100) == pytest.approx(5.789848420884198, abs=1e-11)


def test_counting_limit_is_exact_for_rationals():
    spec = CongruenceSpec(1, 3, 2, 4)
    assert counting_limit(spec, Fraction(7, 12)) == 7
    assert counting_limit(spec, Fraction(83, 12)) == 83
    assert counting_limit(spec, 5) == 60


@settings(max_examples=30, deadline=None)
@given(specs(), st.floats(1.0, 1e5))
def test_delta_many_matches_scalar(spec, x):
    assert delta_many(spec, [x])[0] == pytest.approx(delta(spec, x), abs=1e-7)


def test_main_term_rejects_small_x():
    with pytest.raises(InvalidArgument):
        main_term(CLASSICAL, 0.5)
    with pytest.raises(InvalidArgument):
        delta(CLASSICAL, 0.9)
    with pytest.raises(InvalidArgument):
        delta_many(CLASSICAL, [2.0, 0.5])
    with pytest.raises(InvalidArgument):
        summatory_hyperbola(CLASSICAL, 0)


def test_sieve_memory_cap():
    with pytest.raises(ResourceLimit):
        sieve_divisor_table(CLASSICAL, 10**6, memory_cap=1000)
    with pytest.raises(InvalidArgument):
        sieve_divisor_table(CLASSICAL, 0)


@pytest.mark.parametrize("spec", [CLASSICAL, CongruenceSpec(1, 4, 3, 5), CongruenceSpec(3, 4, 1, 1)])
def test_sawtooth_sums_reproduce_delta(spec):
    xs = np.geomspace(10.0, 1e5, 200)
    defect = delta_many(spec, xs) - np.array([eval_F12(spec, x) + eval_F21(spec, x) for x in xs])
    assert np.max(np.abs(defect)) < 1.0


def test_sawtooth_sum_ranges_follow_their_own_class():
    spec = CongruenceSpec(2, 3, 1, 4)
    x = 50.0
    root = math.isqrt(math.floor(spec.modulus * x))
    direct12 = -sum((3 * x / n - 1 / 4) - math.floor(3 * x / n - 1 / 4) - 0.5 for n in range(2, root + 1, 3))
    direct21 = -sum((4 * x / n - 2 / 3) - math.floor(4 * x / n - 2 / 3) - 0.5 for n in range(1, root + 1, 4))
    assert eval_F12(spec, x) == pytest.approx(direct12, abs=1e-12)
    assert eval_F21(spec, x) == pytest.approx(direct21, abs=1e-12)
