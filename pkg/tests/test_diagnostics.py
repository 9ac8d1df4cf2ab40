"""Slow-convergence diagnostics behind the two trend criteria that stay red.

These pass: they document why the truncated fourth-moment constant and the
desk-scale moment exponents drift the way they do.
"""

import math

import pytest

from cdmoments.constants import c4_estimate
from cdmoments.core_arith import CongruenceSpec
from cdmoments.moments import moment_experiment
from cdmoments.verification import c4_scaled_increments

CLASSICAL = CongruenceSpec(1, 1, 1, 1)
YS = (250, 500, 1000, 2000)


def test_c4_increments_follow_log_cubed_over_root_y():
    # the cross-kernel part is 2 S^2 with S = sum d(n)^2 n^(-3/2), whose tail
    # beyond y is of order (log y)^3 / sqrt(y)
    scaled = c4_scaled_increments(CLASSICAL, YS)
    assert all(a < b for a, b in zip(scaled, scaled[1:]))
    by_log = [s / math.log(y) ** 3 for s, y in zip(scaled, YS)]
    assert all(a > b for a, b in zip(by_log, by_log[1:]))


@pytest.fixture(scope="module")
def classical_reports():
    T = [1e4, 1e5, 1e6]
    return {k: moment_experiment(CLASSICAL, k, T, y_const=10**4) for k in (3, 4)}


def test_third_moment_local_exponent_falls_toward_seven_quarters(classical_reports):
    rows = classical_reports[3].rows
    local = [math.log(b.integral / a.integral) / math.log(b.T / a.T) for a, b in zip(rows, rows[1:])]
    assert local[0] > local[1] > 1.75


def test_fourth_moment_constant_outgrows_truncation(classical_reports):
    rows = classical_reports[4].rows
    effective = [64 * math.pi**4 * r.integral / r.T**2 for r in rows]
    assert all(a < b for a, b in zip(effective, effective[1:]))
    truncated = classical_reports[4].config["c4"]
    longer = c4_estimate(CLASSICAL, 4 * 10**4).c4
    assert truncated < longer < effective[-1]
