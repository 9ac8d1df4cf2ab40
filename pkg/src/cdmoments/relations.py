"""Linear relations among square roots of four integers.

Zero tests never compare floats: sqrt(n) = m * sqrt(q) with q the squarefree
kernel, and square roots of distinct squarefree integers are linearly
independent over the rationals, so a signed sum of roots vanishes iff the
signed multipliers cancel within every kernel class.

Two shapes matter for the fourth moment:

* two-two   sqrt(n1) + sqrt(n2) = sqrt(n3) + sqrt(n4)
* three-one sqrt(n1) + sqrt(n2) + sqrt(n3) = sqrt(n4)

Two-two solutions split into class A (all four share a kernel q and
m1 + m2 = m3 + m4) and class B (n1, n2 of different kernels and
{n3, n4} = {n1, n2}). Class B has quadratic size and is only described.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

import mpmath
import numpy as np

from .core_arith import SpfTable, build_spf_table, kernel_decompose
from .errors import InvalidArgument, OutOfRange

PATTERNS = {"++--": (1, 1, -1, -1), "+++-": (1, 1, 1, -1)}
SHAPES = ("two-two", "three-one")

# float differences below this are re-examined exactly
_TIE_TOL = 1e-9


def _pattern_signs(pattern: str) -> tuple[int, int, int, int]:
    key = pattern.replace(" ", "")
    if key not in PATTERNS:
        raise InvalidArgument(f"pattern must be one of {sorted(PATTERNS)}, got {pattern!r}")
    return PATTERNS[key]


def squarefree_kernel(n: int, table: SpfTable | None = None) -> tuple[int, int]:
    """(q, m) with n = q m**2; falls back to trial division beyond the table."""
    if table is not None and n <= table.limit:
        return tuple(kernel_decompose(n, table))
    if n < 1:
        raise InvalidArgument(f"n must be positive, got {n}")
    q, m, rest, p = 1, 1, n, 2
    while p * p <= rest:
        e = 0
        while rest % p == 0:
            rest //= p
            e += 1
        if e & 1:
            q *= p
        m *= p ** (e >> 1)
        p += 1
    return q * rest, m


def signed_root_sum_is_zero(terms, table: SpfTable | None = None) -> bool:
    """Exact test of sum(c * sqrt(n) for c, n in terms) == 0 for integer c, n >= 0."""
    by_kernel: dict[int, int] = defaultdict(int)
    for coeff, n in terms:
        if n == 0 or coeff == 0:
            continue
        q, m = squarefree_kernel(int(n), table)
        by_kernel[q] += coeff * m
    return all(v == 0 for v in by_kernel.values())


def _sign(v: int) -> int:
    return (v > 0) - (v < 0)


def _sign_lin(f: int, g: int, p: int) -> int:
    """sign(f + g * sqrt(p)) for integers f, g and p >= 0."""
    sg = _sign(g) if p > 0 else 0
    sf = _sign(f)
    if sg == 0:
        return sf
    if sf == 0 or sf == sg:
        return sg
    return sf * _sign(f * f - g * g * p)


def root_sum_sign(n1: int, n2: int, n3: int, n4: int, pattern: str = "++--") -> int:
    """Sign of sqrt(n1) + sqrt(n2) -/+ sqrt(n3) - sqrt(n4) by integer squaring.

    Independent of kernel arithmetic; the reference route for brute-force oracles.
    """
    signs = _pattern_signs(pattern)
    if signs[2] < 0:
        # compare sqrt(a)+sqrt(b) with sqrt(c)+sqrt(d): sign(e + 2 sqrt(ab) - 2 sqrt(cd))
        e = n1 + n2 - n3 - n4
        p, q = n1 * n2, n3 * n4
        head = _sign_lin(e, 2, p)
        if head < 0:
            return -1 if q > 0 else head
        if q == 0:
            return head
        # X = e + 2 sqrt(p) >= 0 against 2 sqrt(q): sign(X^2 - 4q)
        return _sign_lin(e * e + 4 * p - 4 * q, 4 * e, p)
    # sqrt(a)+sqrt(b)+sqrt(c) - sqrt(d)
    if n4 <= n3:
        return 1 if (n1 + n2 > 0 or n4 < n3) else 0
    # compare sqrt(a)+sqrt(b) with sqrt(d)-sqrt(c) > 0: sign(e + 2 sqrt(p) + 2 sqrt(q))
    e = n1 + n2 - n3 - n4
    p, q = n1 * n2, n3 * n4
    head = _sign_lin(e, 2, p)
    if head >= 0:
        return 1 if (head > 0 or q > 0) else 0
    return _sign_lin(4 * q - e * e - 4 * p, -4 * e, p)


@dataclass(frozen=True, eq=False)
class KernelIndex:
    """groups[q] = ascending multipliers m with q m**2 <= y."""

    y: int
    groups: dict

    def kernels(self) -> list[int]:
        return sorted(self.groups)

    def group_size(self, q: int) -> int:
        return len(self.groups.get(q, ()))


def build_kernel_index(y: int, table: SpfTable | None = None) -> KernelIndex:
    if y < 1:
        raise InvalidArgument(f"y must be >= 1, got {y}")
    if table is not None and table.limit < y:
        raise OutOfRange(f"spf table limit {table.limit} < y = {y}")
    if table is None and y >= 2:
        table = build_spf_table(y)
    groups: dict[int, tuple[int, ...]] = {}
    for n in range(1, y + 1):
        q, m = kernel_decompose(n, table)
        if m == 1:
            groups[q] = tuple(range(1, math.isqrt(y // q) + 1))
    return KernelIndex(y, groups)


@dataclass(frozen=True)
class QuadrupleRelation:
    n1: int
    n2: int
    n3: int
    n4: int
    shape: str

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.n1, self.n2, self.n3, self.n4)


@dataclass(frozen=True, eq=False)
class CrossKernelPairings:
    """Class B of the two-two relations, described rather than listed.

    Every ordered pair (n1, n2) with different kernels contributes
    (n1, n2, n1, n2) and (n1, n2, n2, n1).
    """

    index: KernelIndex

    @property
    def count(self) -> int:
        sizes = [len(ms) for ms in self.index.groups.values()]
        total = sum(sizes)
        return 2 * (total * total - sum(s * s for s in sizes))

    def materialize(self) -> Iterator[QuadrupleRelation]:
        members = [(q, q * m * m) for q, ms in self.index.groups.items() for m in ms]
        for q1, a in members:
            for q2, b in members:
                if q1 != q2:
                    yield QuadrupleRelation(a, b, a, b, "two-two")
                    yield QuadrupleRelation(a, b, b, a, "two-two")


def enumerate_two_two(index: KernelIndex) -> Iterator[QuadrupleRelation | CrossKernelPairings]:
    """Class A solutions one by one, then a single CrossKernelPairings marker."""
    for q in index.kernels():
        ms = index.groups[q]
        top = len(ms)
        by_sum = defaultdict(list)
        for a in range(1, top + 1):
            for b in range(1, top + 1):
                by_sum[a + b].append((a, b))
        for s in sorted(by_sum):
            pairs = by_sum[s]
            for a, b in pairs:
                for c, d in pairs:
                    yield QuadrupleRelation(q * a * a, q * b * b, q * c * c, q * d * d, "two-two")
    yield CrossKernelPairings(index)


def enumerate_three_one(index: KernelIndex) -> Iterator[QuadrupleRelation]:
    for q in index.kernels():
        top = len(index.groups[q])
        for a in range(1, top + 1):
            for b in range(1, top - a + 1):
                for c in range(1, top - a - b + 1):
                    d = a + b + c
                    yield QuadrupleRelation(q * a * a, q * b * b, q * c * c, q * d * d, "three-one")


def relation_set(index: KernelIndex, shape: str) -> set[tuple[int, int, int, int]]:
    """Full solution set, materializing class B; only sensible for small y."""
    if shape == "two-two":
        out = set()
        for item in enumerate_two_two(index):
            if isinstance(item, CrossKernelPairings):
                out.update(r.as_tuple() for r in item.materialize())
            else:
                out.add(item.as_tuple())
        return out
    if shape == "three-one":
        return {r.as_tuple() for r in enumerate_three_one(index)}
    raise InvalidArgument(f"shape must be one of {SHAPES}, got {shape!r}")


def brute_force_relations(y: int, shape: str) -> set[tuple[int, int, int, int]]:
    """Reference solution set by scanning (n1, n2, n3) and solving for n4.

    Float candidates are confirmed with ``root_sum_sign``; no kernel arithmetic.
    """
    if shape not in SHAPES:
        raise InvalidArgument(f"shape must be one of {SHAPES}, got {shape!r}")
    roots = np.sqrt(np.arange(1, y + 1, dtype=float))
    pattern = "++--" if shape == "two-two" else "+++-"
    grid2, grid3 = np.meshgrid(roots, roots, indexing="ij")
    out = set()
    for i1 in range(y):
        s = roots[i1] + grid2 + (-grid3 if shape == "two-two" else grid3)
        sq = s * s
        n4 = np.rint(sq)
        hit = (s > 0) & (np.abs(sq - n4) < 1e-6 * np.maximum(1.0, sq)) & (n4 >= 1) & (n4 <= y)
        for i2, i3 in zip(*np.nonzero(hit)):
            cand = (i1 + 1, int(i2) + 1, int(i3) + 1, int(n4[i2, i3]))
            if root_sum_sign(*cand, pattern=pattern) == 0:
                out.add(cand)
    return out


@dataclass(frozen=True)
class NearRelationQuery:
    """n_j in (N_j, 2 N_j]; counts 0 < |sqrt n1 + sqrt n2 +/- sqrt n3 - sqrt n4| < window."""

    ranges: tuple[int, int, int, int]
    window: float
    sign_pattern: str = "++--"

    def __post_init__(self):
        if len(self.ranges) != 4 or any(int(r) < 1 for r in self.ranges):
            raise InvalidArgument(f"ranges must be four integers >= 1, got {self.ranges!r}")
        if not self.window > 0:
            raise InvalidArgument(f"window must be positive, got {self.window!r}")
        _pattern_signs(self.sign_pattern)

    def boxes(self) -> list[np.ndarray]:
        return [np.arange(int(r) + 1, 2 * int(r) + 1, dtype=np.int64) for r in self.ranges]


def _window_fraction(window) -> Fraction:
    if isinstance(window, Fraction):
        return window
    return Fraction(repr(window)) if isinstance(window, float) else Fraction(window)


def _strictly_inside(quad, signs, window: Fraction, table) -> bool:
    """Exact decision of |sum s_j sqrt(n_j)| < window for a boundary candidate."""
    p, q = window.numerator, window.denominator
    base = [(s, q * q * n) for s, n in zip(signs, quad)]
    if signed_root_sum_is_zero(base + [(-1, p * p)], table) or signed_root_sum_is_zero(base + [(1, p * p)], table):
        return False
    with mpmath.workdps(60):
        v = mpmath.fsum(s * mpmath.sqrt(n) for s, n in zip(signs, quad))
        return abs(v) < mpmath.mpf(p) / q


def count_near_relations(query: NearRelationQuery, table: SpfTable | None = None) -> int:
    """Meet-in-the-middle count over pair sums, with exact zero and boundary handling."""
    signs = _pattern_signs(query.sign_pattern)
    b1, b2, b3, b4 = query.boxes()
    top = int(max(b.max() for b in (b1, b2, b3, b4)))
    window = _window_fraction(query.window)
    if table is None or table.limit < top:
        table = build_spf_table(max(top, 2))
    lw = float(window)

    left_n1, left_n2 = (a.ravel() for a in np.meshgrid(b1, b2, indexing="ij"))
    left = np.sqrt(left_n1.astype(float)) + np.sqrt(left_n2.astype(float))
    right_n3, right_n4 = (a.ravel() for a in np.meshgrid(b3, b4, indexing="ij"))
    # value = left - right
    right = -(signs[2] * np.sqrt(right_n3.astype(float)) + signs[3] * np.sqrt(right_n4.astype(float)))
    order = np.argsort(right, kind="stable")
    right_sorted = right[order]

    tol = _TIE_TOL * max(1.0, lw)
    # open inner band |value| < lw - tol, counted wholesale
    inner_lo = np.searchsorted(right_sorted, left - lw + tol, side="right")
    inner_hi = np.searchsorted(right_sorted, left + lw - tol, side="left")
    total = int(np.maximum(inner_hi - inner_lo, 0).sum())

    def matches(lo_vals, hi_vals):
        lo = np.searchsorted(right_sorted, lo_vals, side="left")
        hi = np.searchsorted(right_sorted, hi_vals, side="right")
        for i in np.nonzero(hi > lo)[0]:
            for pos in range(lo[i], hi[i]):
                j = order[pos]
                quad = (int(left_n1[i]), int(left_n2[i]), int(right_n3[j]), int(right_n4[j]))
                yield quad, inner_lo[i] <= pos < inner_hi[i]

    # exact relations inside the inner band were counted and must be removed
    for quad, inner in matches(left - _TIE_TOL, left + _TIE_TOL):
        if inner and signed_root_sum_is_zero(zip(signs, quad), table):
            total -= 1
    # closed shells around |value| = window are decided one quadruple at a time
    for lo_vals, hi_vals in ((left - lw - tol, left - lw + tol), (left + lw - tol, left + lw + tol)):
        for quad, inner in matches(lo_vals, hi_vals):
            if inner or signed_root_sum_is_zero(zip(signs, quad), table):
                continue
            if _strictly_inside(quad, signs, window, table):
                total += 1
    return total


def brute_force_near_count(query: NearRelationQuery) -> int:
    """Direct count over all quadruples; zeros by ``root_sum_sign``, ties in mpmath."""
    signs = _pattern_signs(query.sign_pattern)
    pattern = "++--" if signs[2] < 0 else "+++-"
    boxes = query.boxes()
    window = _window_fraction(query.window)
    lw = float(window)
    grids = np.meshgrid(*boxes, indexing="ij")
    vals = sum(s * np.sqrt(g.astype(float)) for s, g in zip(signs, grids))
    flat = [g.ravel() for g in grids]
    v = vals.ravel()
    count = int(np.count_nonzero((np.abs(v) < lw) & (np.abs(v) > 1e-7) & (np.abs(np.abs(v) - lw) > 1e-7)))
    for i in np.nonzero(np.abs(v) <= 1e-7)[0]:
        quad = tuple(int(f[i]) for f in flat)
        if root_sum_sign(*quad, pattern=pattern) != 0 and lw > 1e-7:
            count += 1
    for i in np.nonzero((np.abs(np.abs(v) - lw) <= 1e-7) & (np.abs(v) > 1e-7))[0]:
        quad = tuple(int(f[i]) for f in flat)
        with mpmath.workdps(80):
            exact = abs(mpmath.fsum(s * mpmath.sqrt(n) for s, n in zip(signs, quad)))
            bound = mpmath.mpf(window.numerator) / window.denominator
            if bound - exact > mpmath.mpf(10) ** -60:
                count += 1
    return count


@dataclass(frozen=True)
class GapResult:
    gap: float
    witness: tuple[int, int, int, int]
    kong_ratio: float


def kong_ratio(gap: float, quad) -> float:
    n, m, k, l = quad
    return gap * math.sqrt(n * m * k * l) * max(quad) ** 1.5


def min_nonzero_gap(bound: int, pattern: str = "++--", table: SpfTable | None = None) -> GapResult:
    """Smallest nonzero |sqrt n + sqrt m +/- sqrt k - sqrt l| over 1 <= n, m, k, l <= bound.

    Sorts the pair sums sqrt n + sqrt m (and, for the '+' sign, the
    differences sqrt l - sqrt k); the minimum is attained between neighbours
    once exactly equal values are merged.
    """
    if not 2 <= bound <= 500:
        raise InvalidArgument(f"bound must lie in [2, 500], got {bound}")
    signs = _pattern_signs(pattern)
    if table is None or table.limit < bound:
        table = build_spf_table(bound)
    ints = np.arange(1, bound + 1, dtype=np.int64)
    a, b = np.triu_indices(bound)
    left_pairs = np.stack([ints[a], ints[b]], axis=1)
    left_vals = np.sqrt(left_pairs[:, 0].astype(float)) + np.sqrt(left_pairs[:, 1].astype(float))
    if signs[2] < 0:
        right_pairs, right_vals = left_pairs, left_vals
        vals = left_vals
        labels = np.zeros(vals.size, dtype=np.int8)
        pairs = left_pairs
        cross_only = False
    else:
        k, l = (g.ravel() for g in np.meshgrid(ints, ints, indexing="ij"))
        right_pairs = np.stack([k, l], axis=1)
        right_vals = np.sqrt(l.astype(float)) - np.sqrt(k.astype(float))
        vals = np.concatenate([left_vals, right_vals])
        labels = np.concatenate([np.zeros(left_vals.size, np.int8), np.ones(right_vals.size, np.int8)])
        pairs = np.concatenate([left_pairs, right_pairs])
        cross_only = True

    order = np.argsort(vals, kind="stable")
    vals, labels, pairs = vals[order], labels[order], pairs[order]

    def as_terms(i):
        # value of element i as signed root terms
        x, y = int(pairs[i, 0]), int(pairs[i, 1])
        if labels[i] == 0:
            return [(1, x), (1, y)]
        return [(-1, x), (1, y)]  # sqrt(l) - sqrt(k) with (k, l) = (x, y)

    # merge exactly equal neighbours into clusters
    diffs = np.diff(vals)
    near = np.nonzero(diffs < 1e-10)[0]
    same = np.zeros(diffs.size, dtype=bool)
    for i in near:
        terms = as_terms(i) + [(-c, n) for c, n in as_terms(i + 1)]
        same[i] = signed_root_sum_is_zero(terms, table)
    starts = np.concatenate([[0], np.nonzero(~same)[0] + 1])
    ends = np.concatenate([starts[1:], [vals.size]])

    best = None
    for c in range(len(starts) - 1):
        s0, e0, s1, e1 = starts[c], ends[c], starts[c + 1], ends[c + 1]
        gap = vals[s1] - vals[e0 - 1]
        if best is not None and gap >= best[0]:
            continue
        if cross_only:
            lab0, lab1 = labels[s0:e0], labels[s1:e1]
            if lab0.min() == 0 and lab1.max() == 1:
                i, j = s0 + int(np.argmin(lab0)), s1 + int(np.argmax(lab1))
            elif lab0.max() == 1 and lab1.min() == 0:
                i, j = s0 + int(np.argmax(lab0)), s1 + int(np.argmin(lab1))
            else:
                continue
        else:
            i, j = e0 - 1, s1
        best = (gap, i, j)
    if best is None:
        raise InvalidArgument("no nonzero value found")
    _, i, j = best
    if cross_only:
        left_i, right_i = (i, j) if labels[i] == 0 else (j, i)
        n, m = (int(v) for v in pairs[left_i])
        k, l = (int(v) for v in pairs[right_i])
    else:
        n, m = (int(v) for v in pairs[j])
        k, l = (int(v) for v in pairs[i])
    quad = (n, m, k, l)
    with mpmath.workdps(50):
        exact = abs(mpmath.sqrt(n) + mpmath.sqrt(m) + signs[2] * mpmath.sqrt(k) - mpmath.sqrt(l))
    gap = float(exact)
    return GapResult(gap, quad, kong_ratio(gap, quad))


def brute_force_min_gap(bound: int, pattern: str = "++--") -> float:
    """O(bound**4) reference for small bounds."""
    signs = _pattern_signs(pattern)
    pat = "++--" if signs[2] < 0 else "+++-"
    roots = np.sqrt(np.arange(1, bound + 1, dtype=float))
    g = np.meshgrid(roots, roots, roots, roots, indexing="ij")
    vals = np.abs(g[0] + g[1] + signs[2] * g[2] - g[3]).ravel()
    order = np.argsort(vals)
    for idx in order:
        quad = np.unravel_index(idx, (bound,) * 4)
        quad = tuple(int(v) + 1 for v in quad)
        if root_sum_sign(*quad, pattern=pat) != 0:
            return float(vals[idx])
    raise InvalidArgument("all values vanish")


NEAR_BOUND_FORMS = ("pair-difference", "three-one", "product")


def near_count_majorant(query: NearRelationQuery, form: str) -> float:
    """Shape of the expected upper bound for ``count_near_relations(query)``.

    * pair-difference (pattern ++--, N <= M, K <= L, N <= K, M ~ L):
      window * sqrt(L) * N * M * K
    * three-one (pattern +++-, N <= M <= K ~ L): window * sqrt(L) * N * M * K
    * product (either pattern, every N_j >= 2):
      prod_j (window**(1/4) * N_j**(7/8) + N_j**(1/2))
    """
    n, m, k, l = (float(r) for r in query.ranges)
    window = float(query.window)
    if form == "pair-difference":
        if query.sign_pattern != "++--" or not (n <= m and k <= l and n <= k and 0.25 <= m / l <= 4):
            raise InvalidArgument("pair-difference form needs pattern ++-- with N <= M, K <= L, N <= K, M ~ L")
        return window * math.sqrt(l) * n * m * k
    if form == "three-one":
        if query.sign_pattern != "+++-" or not (n <= m <= k and 0.25 <= k / l <= 4):
            raise InvalidArgument("three-one form needs pattern +++- with N <= M <= K ~ L")
        return window * math.sqrt(l) * n * m * k
    if form == "product":
        if min(query.ranges) < 2:
            raise InvalidArgument("product form needs every N_j >= 2")
        return math.prod(window**0.25 * r**0.875 + r**0.5 for r in (n, m, k, l))
    raise InvalidArgument(f"form must be one of {NEAR_BOUND_FORMS}, got {form!r}")


def fitted_bound_constant(queries, form: str, table: SpfTable | None = None) -> tuple[float, list]:
    """Smallest C with count <= C * majorant over ``queries``, plus (query, count, majorant) rows."""
    rows = []
    for query in queries:
        rows.append((query, count_near_relations(query, table), near_count_majorant(query, form)))
    if not rows:
        raise InvalidArgument("need at least one query")
    return max(count / bound for _, count, bound in rows), rows
