"""The divisor function d(n; l1, M1, l2, M2), its summatory function and Delta.

Argument convention throughout: ``x`` is the variable of the normalised
error term Delta(M1*M2*x; ...), so the count runs to ``M1*M2*x`` while the
main term is written as a function of ``x`` itself::

    main_term(x) = x*(log x - 1 + g0(lam1) + g0(lam2)) + (1/2 - lam1)*(1/2 - lam2)

with g0 the constant term of the Hurwitz zeta function at s = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core_arith import CongruenceSpec, hurwitz_laurent_constant, hurwitz_zeta_at_zero, sawtooth_array
from .errors import InvalidArgument, ResourceLimit

DEFAULT_MEMORY_CAP = 2 * 10**8  # table entries


@dataclass(frozen=True, eq=False)
class DivisorTable:
    """counts[n] = d(n; spec) for 0 <= n <= limit (counts[0] = 0)."""

    spec: CongruenceSpec
    limit: int
    counts: np.ndarray

    def prefix(self) -> np.ndarray:
        """Cumulative counts: prefix()[n] = sum_{k <= n} d(k; spec)."""
        return np.cumsum(self.counts, dtype=np.int64)


@dataclass(frozen=True)
class MainTermCoefficients:
    """main term M(x) = c_log * x*log(x) + c_lin * x + c_const."""

    spec: CongruenceSpec
    c_log: float
    c_lin: float
    c_const: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = self.c_log * x * np.log(x) + self.c_lin * x + self.c_const
        return float(out) if out.ndim == 0 else out


def class_count(limit: int, residue: int, modulus: int) -> int:
    """#{n >= 1 : n <= limit, n = residue (mod modulus)} for 1 <= residue <= modulus."""
    if limit < residue:
        return 0
    return (limit - residue) // modulus + 1


def _class_count_array(limit: np.ndarray, residue: int, modulus: int) -> np.ndarray:
    return np.where(limit >= residue, (limit - residue) // modulus + 1, 0)


def sieve_divisor_table(spec: CongruenceSpec, limit: int, memory_cap: int = DEFAULT_MEMORY_CAP) -> DivisorTable:
    """Sieve d(n; spec) for n <= limit.

    Pairs with n1 <= sqrt(limit) are laid down by strided slices over n1, the
    remaining pairs (n1 > sqrt(limit), hence n2 < sqrt(limit)) by slices over n2.
    """
    if limit < 1:
        raise InvalidArgument(f"limit must be >= 1, got {limit}")
    if limit + 1 > memory_cap:
        raise ResourceLimit(f"divisor table of {limit + 1} entries exceeds memory cap {memory_cap}")
    l1, m1, l2, m2 = spec.as_tuple()
    counts = np.zeros(limit + 1, dtype=np.int32)
    root = math.isqrt(limit)
    for n1 in range(l1, root + 1, m1):
        counts[n1 * l2 :: n1 * m2] += 1
    # smallest n1 in its class that exceeds root
    first = l1 if l1 > root else l1 + ((root - l1) // m1 + 1) * m1
    for n2 in range(l2, limit // first + 1, m2):
        counts[n2 * first :: n2 * m1] += 1
    counts.setflags(write=False)
    return DivisorTable(spec, limit, counts)


def counting_limit(spec: CongruenceSpec, x) -> int:
    """floor(M1*M2*x), exact for int and Fraction arguments."""
    if isinstance(x, (int, Fraction, np.integer)):
        return math.floor(Fraction(x) * spec.modulus)
    return math.floor(float(x) * spec.modulus)


def summatory_hyperbola(spec: CongruenceSpec, X) -> int:
    """Exact sum_{n <= X} d(n; spec) by Dirichlet's hyperbola method in O(sqrt X)."""
    if X < 1:
        raise InvalidArgument(f"X must be >= 1, got {X}")
    big = math.floor(X) if not isinstance(X, float) else int(math.floor(X))
    l1, m1, l2, m2 = spec.as_tuple()
    root = math.isqrt(big)
    total = 0
    for n1 in range(l1, root + 1, m1):
        total += class_count(big // n1, l2, m2)
    for n2 in range(l2, root + 1, m2):
        total += class_count(big // n2, l1, m1)
    return total - class_count(root, l1, m1) * class_count(root, l2, m2)


def summatory_hyperbola_many(spec: CongruenceSpec, limits) -> np.ndarray:
    """Vectorized ``summatory_hyperbola`` over an array of integer limits."""
    big = np.asarray(limits, dtype=np.int64)
    if big.size and big.min() < 1:
        raise InvalidArgument("all limits must be >= 1")
    l1, m1, l2, m2 = spec.as_tuple()
    root = np.floor(np.sqrt(big.astype(float))).astype(np.int64)
    root -= root * root > big
    root += (root + 1) * (root + 1) <= big
    top = int(root.max()) if big.size else 0
    total = np.zeros(big.shape, dtype=np.int64)
    for n1 in range(l1, top + 1, m1):
        mask = root >= n1
        total += np.where(mask, _class_count_array(big // n1, l2, m2), 0)
    for n2 in range(l2, top + 1, m2):
        mask = root >= n2
        total += np.where(mask, _class_count_array(big // n2, l1, m1), 0)
    total -= _class_count_array(root, l1, m1) * _class_count_array(root, l2, m2)
    return total


def main_term_coefficients(spec: CongruenceSpec) -> MainTermCoefficients:
    g1 = hurwitz_laurent_constant(spec.lambda1)
    g2 = hurwitz_laurent_constant(spec.lambda2)
    const = hurwitz_zeta_at_zero(spec.lambda1) * hurwitz_zeta_at_zero(spec.lambda2)
    return MainTermCoefficients(spec, 1.0, -1.0 + g1 + g2, const)


def main_term(spec: CongruenceSpec, x):
    """Residues of zeta(s,lam1) zeta(s,lam2) x**s / s at s = 1 and s = 0."""
    if np.any(np.asarray(x, dtype=float) < 1):
        raise InvalidArgument(f"x must be >= 1, got {x}")
    return main_term_coefficients(spec)(x)


def delta(spec: CongruenceSpec, x) -> float:
    """Delta(M1*M2*x; spec) = count up to M1*M2*x minus main_term(x)."""
    if x < 1:
        raise InvalidArgument(f"x must be >= 1, got {x}")
    count = summatory_hyperbola(spec, counting_limit(spec, x))
    return count - main_term(spec, float(x))


def delta_many(spec: CongruenceSpec, xs) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    if xs.size and xs.min() < 1:
        raise InvalidArgument("all x must be >= 1")
    counts = summatory_hyperbola_many(spec, np.floor(xs * spec.modulus).astype(np.int64))
    return counts - main_term(spec, xs)


def _psi_sum(x: float, lead: int, lead_mod: int, other_res: int, other_mod: int, modulus: int) -> float:
    root = math.isqrt(math.floor(modulus * x))
    n = np.arange(lead, root + 1, lead_mod, dtype=float)
    if n.size == 0:
        return 0.0
    return -float(np.sum(sawtooth_array(lead_mod * x / n - other_res / other_mod)))


def eval_F12(spec: CongruenceSpec, x: float) -> float:
    """-sum_{n1 <= sqrt(M1 M2 x), n1 = l1 (M1)} psi(M1 x / n1 - l2 / M2)."""
    if x < 1:
        raise InvalidArgument(f"x must be >= 1, got {x}")
    return _psi_sum(x, spec.l1, spec.m1, spec.l2, spec.m2, spec.modulus)


def eval_F21(spec: CongruenceSpec, x: float) -> float:
    """-sum_{n2 <= sqrt(M1 M2 x), n2 = l2 (M2)} psi(M2 x / n2 - l1 / M1)."""
    if x < 1:
        raise InvalidArgument(f"x must be >= 1, got {x}")
    return _psi_sum(x, spec.l2, spec.m2, spec.l1, spec.m1, spec.modulus)
