"""Integer and special-function substrate.

Smallest-prime-factor sieve, squarefree-kernel decomposition (n = q * m**2),
the sawtooth psi(t) = t - floor(t) - 1/2, the nearest-integer distance, and
the two Hurwitz zeta values needed by the main term of the divisor problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InvalidArgument, OutOfRange

# Practical ceiling for the int32 spf array (400 MB).
SPF_PRACTICAL_LIMIT = 10**8

EULER_GAMMA = 0.57721566490153286061

# t - floor(t) rounds to 1.0 for tiny negative t; clamp to the last double below 1
_BELOW_ONE = math.nextafter(1.0, 0.0)

# B_2, B_4, ..., B_20
_BERNOULLI_EVEN = [
    Fraction(1, 6), Fraction(-1, 30), Fraction(1, 42), Fraction(-1, 30),
    Fraction(5, 66), Fraction(-691, 2730), Fraction(7, 6), Fraction(-3617, 510),
    Fraction(43867, 798), Fraction(-174611, 330),
]


@dataclass(frozen=True)
class CongruenceSpec:
    """The tuple (l1, M1, l2, M2) with 1 <= l_i <= M_i."""

    l1: int
    m1: int
    l2: int
    m2: int

    def __post_init__(self):
        for name in ("l1", "m1", "l2", "m2"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise InvalidArgument(f"{name} must be an integer, got {value!r}")
            if value < 1:
                raise InvalidArgument(f"{name} must be positive, got {value}")
        if self.l1 > self.m1:
            raise InvalidArgument(f"l1 must satisfy 1 <= l1 <= m1, got l1={self.l1}, m1={self.m1}")
        if self.l2 > self.m2:
            raise InvalidArgument(f"l2 must satisfy 1 <= l2 <= m2, got l2={self.l2}, m2={self.m2}")

    @property
    def lambda1(self) -> float:
        return self.l1 / self.m1

    @property
    def lambda2(self) -> float:
        return self.l2 / self.m2

    @property
    def modulus(self) -> int:
        """M1 * M2, the scale between x and the counting argument."""
        return self.m1 * self.m2

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.l1, self.m1, self.l2, self.m2)

    def __str__(self):
        return f"{self.l1},{self.m1},{self.l2},{self.m2}"

    @classmethod
    def parse(cls, text: str) -> "CongruenceSpec":
        """Parse ``"l1,M1,l2,M2"``."""
        parts = [p.strip() for p in text.split(",")]
        names = ("l1", "m1", "l2", "m2")
        if len(parts) != 4:
            raise InvalidArgument(f"spec needs 4 comma-separated fields (l1,M1,l2,M2), got {len(parts)}")
        values = []
        for name, part in zip(names, parts):
            try:
                values.append(int(part))
            except ValueError:
                raise InvalidArgument(f"spec field {name} is not an integer: {part!r}") from None
        return cls(*values)


@dataclass(frozen=True, eq=False)
class SpfTable:
    """Smallest prime factor of every n in 2..limit (spf[0], spf[1] are 0, 1)."""

    limit: int
    spf: np.ndarray

    def __getitem__(self, n):
        return int(self.spf[n])


@dataclass(frozen=True)
class KernelDecomposition:
    n: int
    kernel: int
    multiplier: int

    def __iter__(self):
        return iter((self.kernel, self.multiplier))


def build_spf_table(limit: int) -> SpfTable:
    """Linear-memory smallest-prime-factor sieve up to ``limit`` inclusive."""
    if limit < 2:
        raise InvalidArgument(f"limit must be >= 2, got {limit}")
    if limit > SPF_PRACTICAL_LIMIT:
        raise OutOfRange(f"spf limit {limit} exceeds practical ceiling {SPF_PRACTICAL_LIMIT}")
    spf = np.zeros(limit + 1, dtype=np.int32)
    spf[1] = 1
    for p in range(2, math.isqrt(limit) + 1):
        if spf[p] == 0:
            block = spf[p * p :: p]
            block[block == 0] = p
    rest = spf == 0
    rest[0] = False
    spf[rest] = np.nonzero(rest)[0]
    spf.setflags(write=False)
    return SpfTable(limit, spf)


def kernel_decompose(n: int, table: SpfTable | None = None) -> KernelDecomposition:
    """Return the unique (q, m) with n = q * m**2 and q squarefree."""
    if n < 1:
        raise InvalidArgument(f"n must be positive, got {n}")
    if n == 1:
        return KernelDecomposition(1, 1, 1)
    if table is None or n > table.limit:
        raise OutOfRange(f"n={n} is beyond the spf table limit")
    spf = table.spf
    kernel, multiplier = 1, 1
    rest = n
    while rest > 1:
        p = int(spf[rest])
        e = 0
        while rest % p == 0:
            rest //= p
            e += 1
        if e & 1:
            kernel *= p
        multiplier *= p ** (e >> 1)
    return KernelDecomposition(n, kernel, multiplier)


def kernel_arrays(limit: int) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized kernels and multipliers for every n in 0..limit (index 0 unused).

    Divides out p**2 for every prime p <= sqrt(limit) in place.
    """
    if limit < 1:
        raise InvalidArgument(f"limit must be >= 1, got {limit}")
    kernel = np.arange(limit + 1, dtype=np.int64)
    mult = np.ones(limit + 1, dtype=np.int64)
    root = math.isqrt(limit)
    is_prime = np.ones(root + 1, dtype=bool)
    is_prime[:2] = False
    for p in range(2, math.isqrt(root) + 1):
        if is_prime[p]:
            is_prime[p * p :: p] = False
    for p in np.nonzero(is_prime)[0].tolist():
        sq = p * p
        idx = np.arange(sq, limit + 1, sq)
        while idx.size:
            kernel[idx] //= sq
            mult[idx] *= p
            idx = idx[kernel[idx] % sq == 0]
    return kernel, mult


def _check_finite(t):
    if not math.isfinite(t):
        raise InvalidArgument(f"argument must be finite, got {t!r}")


def sawtooth(t: float) -> float:
    """psi(t) = t - floor(t) - 1/2, in [-1/2, 1/2); -1/2 at integers."""
    _check_finite(t)
    if isinstance(t, Fraction):
        return t - math.floor(t) - Fraction(1, 2)
    return min(t - math.floor(t), _BELOW_ONE) - 0.5


def sawtooth_array(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)):
        raise InvalidArgument("argument must be finite")
    return np.minimum(t - np.floor(t), _BELOW_ONE) - 0.5


def nearest_integer_distance(t: float) -> float:
    """||t||, the distance from t to the nearest integer."""
    _check_finite(t)
    frac = t - math.floor(t)
    return min(frac, 1 - frac)


def _check_lambda(lam):
    if not (0 < lam <= 1):
        raise InvalidArgument(f"lambda must lie in (0, 1], got {lam!r}")


def digamma(z: float, shift: int = 16, terms: int = 10) -> float:
    """Digamma by recurrence up to z + shift and the Euler-Maclaurin tail.

    With shift = 16 and ten Bernoulli terms the truncation error is below
    |B_22| / (22 * 17**22), far under double precision.
    """
    if z <= 0:
        raise InvalidArgument(f"digamma argument must be positive, got {z}")
    acc = 0.0
    for k in range(shift):
        acc -= 1.0 / (z + k)
    w = z + shift
    inv2 = 1.0 / (w * w)
    series = 0.0
    power = inv2
    for j, b in enumerate(_BERNOULLI_EVEN[:terms], start=1):
        series += float(b) / (2 * j) * power
        power *= inv2
    return acc + math.log(w) - 0.5 / w - series


def hurwitz_laurent_constant(lam: float) -> float:
    """Constant term gamma_0(lam) of zeta(s, lam) at s = 1, i.e. -digamma(lam)."""
    _check_lambda(lam)
    return -digamma(lam)


def hurwitz_zeta_at_zero(lam: float) -> float:
    """zeta(0, lam) = 1/2 - lam."""
    _check_lambda(lam)
    return 0.5 - lam


def hurwitz_zeta_em(s: float, a: float, n_terms: int = 30, bernoulli_terms: int = 8) -> float:
    """Euler-Maclaurin evaluation of zeta(s, a) for real s != 1.

    Valid through the analytic continuation for s > -2*bernoulli_terms + 1;
    used to cross-check the closed forms above.
    """
    if s == 1:
        raise InvalidArgument("zeta(s, a) has a pole at s = 1")
    if a <= 0:
        raise InvalidArgument(f"a must be positive, got {a}")
    head = math.fsum((k + a) ** (-s) for k in range(n_terms))
    big = n_terms + a
    total = head + big ** (1 - s) / (s - 1) + 0.5 * big ** (-s)
    rising = s  # s (s+1) ... (s+2j-2)
    fact = 1.0
    for j, b in enumerate(_BERNOULLI_EVEN[:bernoulli_terms], start=1):
        if j > 1:
            rising *= (s + 2 * j - 3) * (s + 2 * j - 2)
        fact *= (2 * j - 1) * (2 * j)
        total += float(b) / fact * rising * big ** (-s - 2 * j + 1)
    return total
