"""The fourth-moment constant C4(l1/M1, l2/M2) and its building blocks.

Twisted weights w(n) = sum_{hr=n} e(h l2/M2 + r l1/M1 + 1/8) turn the
factorization sums in s_{4;v} into products: for a relation with signs
sigma_j, sum over factorizations of cos(2 pi beta) equals
Re prod_j w(n_j)^{sigma_j}, where w^{-1} means the complex conjugate.

With W(n) = w(n) n^{-3/4}:

* s_{4;2}(y) = sum_q sum_s |sum_{a+b=s} W_q(a) W_q(b)|^2 + 2 (S^2 - sum_q S_q^2)
  (same-kernel quadruples, then cross-kernel pairings), S_q = sum_m |W(q m^2)|^2;
* s_{4;1}(y) = s_{4;3}(y) = sum_q sum_s Re[(W_q * W_q * W_q)(s) conj W_q(s)].
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core_arith import CongruenceSpec, kernel_arrays
from .errors import InvalidArgument, ResourceLimit
from .relations import root_sum_sign
from .voronoi import build_factorizations, phase_numerator

# reporting constant in tail_estimate = TAIL_KAPPA * y**-0.5
TAIL_KAPPA = 10.0
BRUTE_FORCE_MAX_Y = 50

# i-vector used for each v when none is given
CANONICAL_SIGNS = {1: (0, 0, 1), 2: (0, 1, 1), 3: (1, 1, 1)}


@dataclass(frozen=True, eq=False)
class TwistedWeightTable:
    """w[n] for 1 <= n <= y (w[0] = 0)."""

    spec: CongruenceSpec
    y: int
    w: np.ndarray


@dataclass(frozen=True)
class SeriesValue:
    v: int
    y: int
    value: float
    tail_estimate: float


@dataclass(frozen=True)
class C4Estimate:
    spec: CongruenceSpec
    y: int
    c4: float
    tail: float
    series: tuple[SeriesValue, ...]


def build_twisted_weights(spec: CongruenceSpec, y: int) -> TwistedWeightTable:
    if y < 1:
        raise InvalidArgument(f"y must be >= 1, got {y}")
    fac = build_factorizations(spec, y)
    phasors = np.exp(2j * np.pi * fac.phase)
    w = np.zeros(y + 1, dtype=complex)
    np.add.at(w, fac.n, phasors)
    w.setflags(write=False)
    return TwistedWeightTable(spec, y, w)


def _kernel_groups(y: int):
    kernel, mult = kernel_arrays(y)
    squarefree = np.nonzero(mult[1:] == 1)[0] + 1
    for q in squarefree.tolist():
        top = math.isqrt(y // q)
        yield q, q * np.arange(1, top + 1, dtype=np.int64) ** 2


def _scaled(weights: TwistedWeightTable) -> np.ndarray:
    n = np.arange(weights.y + 1, dtype=float)
    n[0] = 1.0
    out = weights.w * n**-0.75
    out[0] = 0
    return out


def _check_v(v):
    if v not in (1, 2, 3):
        raise InvalidArgument(f"v must be 1, 2 or 3, got {v!r}")


def _tail(y: int) -> float:
    return TAIL_KAPPA * y**-0.5


def s4v_truncated(weights: TwistedWeightTable, v: int) -> SeriesValue:
    """s_{4;v}(y) from the kernel structure of the relations."""
    _check_v(v)
    W = _scaled(weights)
    y = weights.y
    if v == 2:
        same_kernel = 0.0
        cross_total = 0.0
        cross_diag = 0.0
        for _, members in _kernel_groups(y):
            wq = W[members]
            conv = np.convolve(wq, wq)
            same_kernel += float(np.sum(np.abs(conv) ** 2))
            sq = float(np.sum(np.abs(wq) ** 2))
            cross_total += sq
            cross_diag += sq * sq
        value = same_kernel + 2.0 * (cross_total * cross_total - cross_diag)
    else:
        value = 0.0
        for _, members in _kernel_groups(y):
            wq = W[members]
            if wq.size < 3:
                continue
            triple = np.convolve(np.convolve(wq, wq), wq)
            # triple[k] collects a+b+c = k+3, matched with multiplier d = k+3 at wq[k+2]
            hits = triple[: wq.size - 2]
            fourth = wq[2:]
            value += float(np.sum((hits * np.conj(fourth)).real))
    return SeriesValue(v, y, value, _tail(y))


def c4_estimate(spec: CongruenceSpec, y: int) -> C4Estimate:
    """C4(y) = 3 s_{4;1}(y) + 3 s_{4;2}(y) + s_{4;3}(y)."""
    if y < 10:
        raise InvalidArgument(f"y must be >= 10, got {y}")
    return c4_from_weights(build_twisted_weights(spec, y))


def c4_from_weights(weights: TwistedWeightTable) -> C4Estimate:
    spec, y = weights.spec, weights.y
    if y < 10:
        raise InvalidArgument(f"y must be >= 10, got {y}")
    series = tuple(s4v_truncated(weights, v) for v in (1, 2, 3))
    binom = (3, 3, 1)
    c4 = sum(b * s.value for b, s in zip(binom, series))
    tail = sum(b * s.tail_estimate for b, s in zip(binom, series))
    return C4Estimate(spec, y, c4, tail, series)


def _relation_holds(quad, sigma) -> bool:
    plus = [n for n, s in zip(quad, sigma) if s > 0]
    minus = [n for n, s in zip(quad, sigma) if s < 0]
    if len(plus) == 2:
        return root_sum_sign(plus[0], plus[1], minus[0], minus[1], "++--") == 0
    if len(plus) == 3:
        return root_sum_sign(plus[0], plus[1], plus[2], minus[0], "+++-") == 0
    if len(plus) == 1:
        return root_sum_sign(minus[0], minus[1], minus[2], plus[0], "+++-") == 0
    return False


def s4v_bruteforce(spec: CongruenceSpec, v: int, y: int, signs: tuple[int, int, int] | None = None) -> float:
    """Direct O(y^4) evaluation summing cos(2 pi beta) over every factorization tuple.

    ``signs`` is the exponent vector (i1, i2, i3); it must have weight ``v``.
    """
    _check_v(v)
    if y > BRUTE_FORCE_MAX_Y:
        raise ResourceLimit(f"brute force refuses y = {y} > {BRUTE_FORCE_MAX_Y}")
    if y < 1:
        raise InvalidArgument(f"y must be >= 1, got {y}")
    signs = CANONICAL_SIGNS[v] if signs is None else tuple(signs)
    if len(signs) != 3 or any(s not in (0, 1) for s in signs) or sum(signs) != v:
        raise InvalidArgument(f"signs must be a 0/1 triple of weight {v}, got {signs!r}")
    sigma = (1,) + tuple(-1 if s else 1 for s in signs)

    den = 8 * spec.modulus
    numerators = [None]
    for n in range(1, y + 1):
        numerators.append(np.array([phase_numerator(spec, h, n // h) for h in range(1, n + 1) if n % h == 0], dtype=np.int64))
    cos_table = np.cos(2 * np.pi * np.arange(den) / den)

    roots = np.sqrt(np.arange(1, y + 1, dtype=float))
    grids = np.meshgrid(roots, roots, roots, roots, indexing="ij", sparse=True)
    alpha = sum(s * g for s, g in zip(sigma, grids))
    total = 0.0
    for idx in zip(*np.nonzero(np.abs(alpha) < 1e-9)):
        quad = tuple(int(i) + 1 for i in idx)
        if not _relation_holds(quad, sigma):
            continue
        acc = np.zeros(1, dtype=np.int64)
        for n, s in zip(quad, sigma):
            acc = (acc[:, None] + s * numerators[n][None, :]).ravel()
        total += float(cos_table[acc % den].sum()) / (quad[0] * quad[1] * quad[2] * quad[3]) ** 0.75
    return total


def all_sign_vectors(v: int) -> list[tuple[int, int, int]]:
    _check_v(v)
    return [s for s in itertools.product((0, 1), repeat=3) if sum(s) == v]
