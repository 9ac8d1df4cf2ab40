import itertools
import math

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdmoments.core_arith import build_spf_table
from cdmoments.errors import InvalidArgument
from cdmoments.relations import (CrossKernelPairings, NearRelationQuery, brute_force_min_gap, brute_force_near_count,
                                 brute_force_relations, build_kernel_index, count_near_relations, enumerate_three_one,
                                 enumerate_two_two, fitted_bound_constant, kong_ratio, min_nonzero_gap,
                                 near_count_majorant, relation_set, root_sum_sign, signed_root_sum_is_zero,
                                 squarefree_kernel)

TABLE = build_spf_table(2000)
SIGNS = {"++--": (1, 1, -1, -1), "+++-": (1, 1, 1, -1)}


def test_squarefree_kernel_examples():
    assert squarefree_kernel(72, TABLE) == (2, 6)
    assert squarefree_kernel(1) == (1, 1)
    assert squarefree_kernel(10**6 + 3 * 49) == squarefree_kernel(10**6 + 147, build_spf_table(10**6 + 200))


@settings(max_examples=400)
@given(st.sampled_from(["++--", "+++-"]), st.lists(st.integers(1, 400), min_size=4, max_size=4))
def test_kernel_route_agrees_with_squaring_cascade(pattern, quad):
    by_kernel = signed_root_sum_is_zero(zip(SIGNS[pattern], quad), TABLE)
    assert by_kernel == (root_sum_sign(*quad, pattern=pattern) == 0)


@settings(max_examples=300)
@given(st.sampled_from(["++--", "+++-"]), st.lists(st.integers(1, 10**6), min_size=4, max_size=4))
def test_cascade_sign_matches_high_precision(pattern, quad):
    with mpmath.workdps(80):
        value = mpmath.fsum(s * mpmath.sqrt(n) for s, n in zip(SIGNS[pattern], quad))
    expected = 0 if abs(value) < mpmath.mpf(10) ** -60 else (1 if value > 0 else -1)
    assert root_sum_sign(*quad, pattern=pattern) == expected


def test_known_relations():
    assert root_sum_sign(1, 9, 4, 4, "++--") == 0
    assert root_sum_sign(2, 18, 8, 8, "++--") == 0
    assert root_sum_sign(1, 1, 1, 9, "+++-") == 0
    assert root_sum_sign(1, 2, 1, 1, "++--") == 1


@pytest.mark.parametrize("y", [8, 9, 30, 60])
@pytest.mark.parametrize("shape", ["two-two", "three-one"])
def test_enumerators_match_brute_force(y, shape):
    assert relation_set(build_kernel_index(y), shape) == brute_force_relations(y, shape)


def test_three_one_up_to_nine():
    assert relation_set(build_kernel_index(9), "three-one") == {(1, 1, 1, 9)}
    rows = {r.as_tuple() for r in enumerate_three_one(build_kernel_index(16))}
    assert {(1, 1, 1, 9), (1, 1, 4, 16), (1, 4, 1, 16), (4, 1, 1, 16)} <= rows


def test_cross_kernel_marker_counts_its_members():
    index = build_kernel_index(40)
    items = list(enumerate_two_two(index))
    marker = items[-1]
    assert isinstance(marker, CrossKernelPairings)
    assert not any(isinstance(item, CrossKernelPairings) for item in items[:-1])
    assert marker.count == sum(1 for _ in marker.materialize())


def test_kernel_index_groups():
    index = build_kernel_index(50)
    assert index.groups[2] == (1, 2, 3, 4, 5)
    assert index.group_size(3) == 4
    assert index.group_size(4) == 0
    assert sum(index.group_size(q) for q in index.kernels()) == 50


def test_near_count_frozen_box():
    query = NearRelationQuery((8, 8, 8, 8), 0.01, "++--")
    assert count_near_relations(query) == 32 == brute_force_near_count(query)


@pytest.mark.parametrize("pattern", ["++--", "+++-"])
@pytest.mark.parametrize("window", [1.0, 2.0, 0.5, 0.05, 1e-3])
@pytest.mark.parametrize("ranges", [(1, 1, 1, 1), (2, 4, 1, 8), (4, 4, 4, 4), (16, 2, 8, 16), (3, 5, 7, 9)])
def test_near_count_matches_brute_force(pattern, window, ranges):
    query = NearRelationQuery(ranges, window, pattern)
    assert count_near_relations(query) == brute_force_near_count(query)


def test_near_count_excludes_the_window_edge():
    # sqrt(4) - sqrt(1) = 1 exactly: with window 1 such quadruples are not inside
    query = NearRelationQuery((1, 1, 1, 1), 1.0, "++--")
    brute = 0
    for quad in ((a, b, c, d) for a in (2,) for b in (2,) for c in (2,) for d in (2,)):
        value = sum(s * math.sqrt(n) for s, n in zip(SIGNS["++--"], quad))
        brute += 0 < abs(value) < 1
    assert count_near_relations(query) == brute


def test_near_query_validation():
    with pytest.raises(InvalidArgument):
        NearRelationQuery((1, 2, 3), 0.1)
    with pytest.raises(InvalidArgument):
        NearRelationQuery((1, 2, 3, 4), 0.0)
    with pytest.raises(InvalidArgument):
        NearRelationQuery((1, 2, 3, 4), 0.1, "+-+-")


@pytest.mark.parametrize("pattern", ["++--", "+++-"])
@pytest.mark.parametrize("bound", [2, 3, 7, 12, 20])
def test_min_gap_matches_brute_force(pattern, bound):
    assert min_nonzero_gap(bound, pattern).gap == pytest.approx(brute_force_min_gap(bound, pattern), rel=1e-9)


def test_min_gap_frozen():
    res = min_nonzero_gap(2, "++--")
    assert res.gap == pytest.approx(math.sqrt(2) - 1, abs=1e-15)
    big = min_nonzero_gap(300, "++--")
    assert big.witness == (171, 177, 88, 289)
    assert big.gap == pytest.approx(6.6252322726257168e-09, rel=1e-9)
    assert big.kong_ratio >= 0.05


def test_kong_ratio_formula():
    assert kong_ratio(0.5, (1, 4, 9, 16)) == pytest.approx(0.5 * math.sqrt(576) * 64)


def test_gap_bound_domain():
    with pytest.raises(InvalidArgument):
        min_nonzero_gap(1)
    with pytest.raises(InvalidArgument):
        min_nonzero_gap(501)


def _pair_difference_grid():
    out = []
    for n, k, l, c in itertools.product((2, 4, 8), (4, 8, 16), (16, 32, 64), (1, 4)):
        if n <= k <= l:
            out.append(NearRelationQuery((n, l, k, l), c / math.sqrt(l), "++--"))
    return out[:20]


def _three_one_grid():
    out = []
    for n, m, k, c in itertools.product((2, 4, 8), (2, 4, 8), (8, 16, 32), (1, 4)):
        if n <= m <= k:
            out.append(NearRelationQuery((n, m, k, 4 * k), c / math.sqrt(4 * k), "+++-"))
    return out[:20]


def test_pair_difference_bound_constant():
    const, rows = fitted_bound_constant(_pair_difference_grid(), "pair-difference")
    assert len(rows) == 20 and all(q.window * math.sqrt(q.ranges[3]) >= 1 for q, _, _ in rows)
    assert const == pytest.approx(3.865234375)


def test_three_one_bound_constant():
    const, rows = fitted_bound_constant(_three_one_grid(), "three-one")
    assert len(rows) == 20 and all(count > 0 for _, count, _ in rows)
    assert const == pytest.approx(4.91796875)


def test_product_bound_constant():
    queries = [NearRelationQuery(r, w, p) for r in [(2, 2, 2, 8), (4, 4, 4, 16), (2, 4, 8, 32), (8, 8, 8, 8),
                                                   (16, 16, 16, 64)]
               for w in (0.01, 0.1) for p in ("++--", "+++-")]
    const, _ = fitted_bound_constant(queries, "product")
    assert 0 < const < 1


def test_bound_forms_check_their_configuration():
    with pytest.raises(InvalidArgument):
        near_count_majorant(NearRelationQuery((8, 2, 4, 2), 0.1, "++--"), "pair-difference")
    with pytest.raises(InvalidArgument):
        near_count_majorant(NearRelationQuery((2, 4, 8, 8), 0.1, "++--"), "three-one")
    with pytest.raises(InvalidArgument):
        near_count_majorant(NearRelationQuery((1, 4, 8, 8), 0.1, "++--"), "product")
    with pytest.raises(InvalidArgument):
        near_count_majorant(NearRelationQuery((2, 4, 8, 8), 0.1, "++--"), "cubic")
