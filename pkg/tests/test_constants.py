import math

import numpy as np
import pytest

from cdmoments.constants import (TAIL_KAPPA, all_sign_vectors, build_twisted_weights, c4_estimate, c4_from_weights,
                                 s4v_bruteforce, s4v_truncated)
from cdmoments.core_arith import CongruenceSpec
from cdmoments.errors import InvalidArgument, ResourceLimit
from cdmoments.relations import build_kernel_index, relation_set

CLASSICAL = CongruenceSpec(1, 1, 1, 1)
SPECS = [CLASSICAL, CongruenceSpec(1, 2, 1, 2), CongruenceSpec(1, 3, 2, 4), CongruenceSpec(3, 4, 1, 6)]


def test_weights_are_twisted_divisor_sums():
    spec = CongruenceSpec(2, 3, 1, 4)
    w = build_twisted_weights(spec, 30).w
    for n in range(1, 31):
        direct = sum(np.exp(2j * np.pi * (h * 1 / 4 + (n // h) * 2 / 3 + 1 / 8)) for h in range(1, n + 1) if n % h == 0)
        assert w[n] == pytest.approx(direct, abs=1e-12)
    assert w[0] == 0


def test_classical_weights_have_divisor_modulus():
    w = build_twisted_weights(CLASSICAL, 100).w
    d = [sum(1 for k in range(1, n + 1) if n % k == 0) for n in range(1, 101)]
    assert np.allclose(np.abs(w[1:]), d)


@pytest.mark.parametrize("spec", SPECS)
@pytest.mark.parametrize("y", [9, 20])
@pytest.mark.parametrize("v", [1, 2, 3])
def test_fast_series_matches_brute_force(spec, y, v):
    fast = s4v_truncated(build_twisted_weights(spec, y), v).value
    assert fast == pytest.approx(s4v_bruteforce(spec, v, y), abs=1e-10)


@pytest.mark.parametrize("spec", SPECS[1:3])
@pytest.mark.parametrize("v", [1, 2, 3])
def test_sign_vectors_give_the_same_series(spec, v):
    values = [s4v_bruteforce(spec, v, 20, signs) for signs in all_sign_vectors(v)]
    assert max(values) - min(values) <= 1e-12


def test_two_two_series_from_explicit_relation_list():
    # independent of the kernel formula: sum over the materialized solution set
    spec = CongruenceSpec(1, 3, 2, 4)
    y = 25
    W = build_twisted_weights(spec, y).w * np.concatenate([[0.0], np.arange(1, y + 1) ** -0.75])
    total = 0.0
    for n1, n2, n3, n4 in relation_set(build_kernel_index(y), "two-two"):
        total += (W[n1] * W[n2] * np.conj(W[n3]) * np.conj(W[n4])).real
    assert s4v_truncated(build_twisted_weights(spec, y), 2).value == pytest.approx(total, abs=1e-12)


@pytest.mark.parametrize("spec", SPECS)
def test_one_three_and_three_one_agree(spec):
    weights = build_twisted_weights(spec, 500)
    assert s4v_truncated(weights, 1).value == pytest.approx(s4v_truncated(weights, 3).value, abs=1e-12)


def test_classical_constant_frozen():
    est = c4_estimate(CLASSICAL, 1000)
    assert est.c4 == pytest.approx(4578.462653846991, rel=1e-12)
    assert abs(est.series[0].value) < 1e-12
    assert est.tail == pytest.approx(7 * TAIL_KAPPA / math.sqrt(1000))
    assert c4_from_weights(build_twisted_weights(CLASSICAL, 1000)).c4 == est.c4


def test_classical_constant_increases_with_y():
    values = [c4_estimate(CLASSICAL, y).c4 for y in (100, 200, 400, 800)]
    assert all(a < b for a, b in zip(values, values[1:]))


def test_argument_checks():
    with pytest.raises(InvalidArgument):
        c4_estimate(CLASSICAL, 5)
    with pytest.raises(ResourceLimit):
        s4v_bruteforce(CLASSICAL, 2, 51)
    with pytest.raises(InvalidArgument):
        s4v_bruteforce(CLASSICAL, 2, 10, (1, 0, 0))
    with pytest.raises(InvalidArgument):
        s4v_truncated(build_twisted_weights(CLASSICAL, 10), 4)
    assert all_sign_vectors(2) == [(0, 1, 1), (1, 0, 1), (1, 1, 0)]
