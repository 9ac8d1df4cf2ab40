import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdmoments.core_arith import (EULER_GAMMA, CongruenceSpec, build_spf_table, digamma, hurwitz_laurent_constant,
                                  hurwitz_zeta_at_zero, hurwitz_zeta_em, kernel_arrays, kernel_decompose,
                                  nearest_integer_distance, sawtooth, sawtooth_array)
from cdmoments.errors import InvalidArgument, OutOfRange

TABLE = build_spf_table(10**5)


@st.composite
def specs(draw, max_modulus=12):
    m1 = draw(st.integers(1, max_modulus))
    m2 = draw(st.integers(1, max_modulus))
    return CongruenceSpec(draw(st.integers(1, m1)), m1, draw(st.integers(1, m2)), m2)


@given(specs())
def test_spec_string_round_trip(spec):
    assert CongruenceSpec.parse(str(spec)) == spec
    assert spec.modulus == spec.m1 * spec.m2
    assert 0 < spec.lambda1 <= 1 and 0 < spec.lambda2 <= 1


@pytest.mark.parametrize("text, field", [("1,x,1,1", "m1"), ("1,1,q,1", "l2"), ("1,1,1,", "m2")])
def test_spec_parse_names_bad_field(text, field):
    with pytest.raises(InvalidArgument, match=field):
        CongruenceSpec.parse(text)


@pytest.mark.parametrize("fields", [(0, 1, 1, 1), (3, 2, 1, 1), (1, 1, 2, 1), (1, -1, 1, 1), (1.0, 1, 1, 1)])
def test_spec_rejects_invalid_fields(fields):
    with pytest.raises(InvalidArgument):
        CongruenceSpec(*fields)


def test_spec_parse_needs_four_fields():
    with pytest.raises(InvalidArgument, match="4"):
        CongruenceSpec.parse("1,2,3")


def _smallest_factor(n):
    for p in range(2, math.isqrt(n) + 1):
        if n % p == 0:
            return p
    return n


def test_spf_matches_trial_division():
    table = build_spf_table(3000)
    assert all(table[n] == _smallest_factor(n) for n in range(2, 3001))


def test_spf_limits():
    with pytest.raises(InvalidArgument):
        build_spf_table(1)
    with pytest.raises(OutOfRange):
        build_spf_table(10**8 + 1)


def _is_squarefree(q):
    return all(q % (p * p) for p in range(2, math.isqrt(q) + 1))


@given(st.integers(1, 10**5))
def test_kernel_decomposition_is_valid(n):
    q, m = kernel_decompose(n, TABLE)
    assert q * m * m == n and _is_squarefree(q)


def test_kernel_arrays_match_scalar_route():
    kernel, mult = kernel_arrays(5000)
    for n in range(1, 5001):
        assert (kernel[n], mult[n]) == tuple(kernel_decompose(n, TABLE))


def test_kernel_decompose_bounds():
    assert tuple(kernel_decompose(1)) == (1, 1)
    with pytest.raises(OutOfRange):
        kernel_decompose(50, build_spf_table(30))
    with pytest.raises(InvalidArgument):
        kernel_decompose(0, TABLE)


@given(st.floats(-1e6, 1e6, allow_nan=False), st.integers(-100, 100))
def test_sawtooth_is_periodic_and_bounded(t, k):
    value = sawtooth(t)
    assert -0.5 <= value < 0.5
    # t + k may round onto the jump, so compare modulo 1
    assert nearest_integer_distance(sawtooth(t + k) - value) <= 1e-6


def test_sawtooth_values():
    assert sawtooth(0.0) == -0.5
    assert sawtooth(0.25) == -0.25
    assert sawtooth(Fraction(7, 3)) == Fraction(-1, 6)
    assert np.allclose(sawtooth_array([0.0, 0.75, -0.25]), [-0.5, 0.25, 0.25])
    assert nearest_integer_distance(2.3) == pytest.approx(0.3)
    assert nearest_integer_distance(-0.9) == pytest.approx(0.1)


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_non_finite_arguments_rejected(bad):
    with pytest.raises(InvalidArgument):
        sawtooth(bad)
    with pytest.raises(InvalidArgument):
        nearest_integer_distance(bad)
    with pytest.raises(InvalidArgument):
        sawtooth_array([0.0, bad])


@settings(max_examples=200)
@given(st.floats(1e-3, 50.0))
def test_digamma_matches_mpmath(z):
    assert digamma(z) == pytest.approx(float(mpmath.digamma(z)), rel=1e-13, abs=1e-13)


def test_laurent_constant_closed_forms():
    assert hurwitz_laurent_constant(1.0) == pytest.approx(EULER_GAMMA, abs=1e-15)
    assert hurwitz_laurent_constant(0.5) == pytest.approx(EULER_GAMMA + 2 * math.log(2), abs=1e-14)
    assert hurwitz_laurent_constant(0.25) == pytest.approx(EULER_GAMMA + math.pi / 2 + 3 * math.log(2), abs=1e-14)


@pytest.mark.parametrize("lam", [0.1, 0.25, 1 / 3, 0.5, 0.8, 1.0])
def test_laurent_constant_from_limit_of_zeta(lam):
    # symmetric difference cancels the odd Laurent terms; Richardson removes h^2
    def sym(h):
        return (hurwitz_zeta_em(1 + h, lam, 60, 10) - 1 / h + hurwitz_zeta_em(1 - h, lam, 60, 10) + 1 / h) / 2

    h = 1e-3
    estimate = (4 * sym(h / 2) - sym(h)) / 3
    assert estimate == pytest.approx(hurwitz_laurent_constant(lam), abs=1e-9)


@pytest.mark.parametrize("lam", [0.2, 0.5, 0.75, 1.0])
def test_zeta_at_zero(lam):
    assert hurwitz_zeta_at_zero(lam) == pytest.approx(float(mpmath.zeta(0, lam)), abs=1e-15)
    assert hurwitz_zeta_em(0.0, lam) == pytest.approx(0.5 - lam, abs=1e-13)


@pytest.mark.parametrize("s", [-0.5, 0.5, 2.0, 3.5])
@pytest.mark.parametrize("a", [0.25, 0.5, 1.0])
def test_euler_maclaurin_zeta(s, a):
    assert hurwitz_zeta_em(s, a) == pytest.approx(float(mpmath.zeta(s, a)), rel=1e-12)


def test_lambda_domain():
    for bad in (0.0, 1.5, -0.2):
        with pytest.raises(InvalidArgument):
            hurwitz_laurent_constant(bad)
    with pytest.raises(InvalidArgument):
        hurwitz_zeta_em(1.0, 0.5)
    with pytest.raises(InvalidArgument):
        digamma(0.0)
