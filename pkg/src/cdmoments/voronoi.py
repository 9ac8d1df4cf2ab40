"""Truncated Voronoi-type expansion of Delta for the congruence divisor problem.

    R0(x; y) = x**(1/4) / (sqrt(2) pi) * sum_{n <= y} tau(n, x) / n**(3/4)
    tau(n, x) = sum_{hr = n} cos(4 pi sqrt(n x) - 2 pi (h l2/M2 + r l1/M1 + 1/8))

Phases h l2/M2 + r l1/M1 + 1/8 are reduced modulo 1 as integers over the
common denominator 8 M1 M2 before any trigonometric call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core_arith import CongruenceSpec, nearest_integer_distance
from .divisor import delta_many
from .errors import InvalidArgument

PHASE_MODES = ("exact-rational", "float")


def phase_numerator(spec: CongruenceSpec, h, r):
    """Integer k in [0, 8 M1 M2) with h l2/M2 + r l1/M1 + 1/8 = k / (8 M1 M2) mod 1."""
    l1, m1, l2, m2 = spec.as_tuple()
    den = 8 * m1 * m2
    return (8 * (h * l2 * m1 + r * l1 * m2) + m1 * m2) % den


def _phase_float(spec: CongruenceSpec, h, r):
    return h * spec.l2 / spec.m2 + r * spec.l1 / spec.m1 + 0.125


@dataclass(frozen=True, eq=False)
class Factorizations:
    """Flat list of all ordered factorizations n = h * r for n <= y.

    ``n[i]``, ``phase[i]`` describe factorization i; ``phase`` is the reduced
    phase as a fraction of a turn.
    """

    y: int
    n: np.ndarray
    h: np.ndarray
    r: np.ndarray
    phase: np.ndarray


def build_factorizations(spec: CongruenceSpec, y: int, phase_mode: str = "exact-rational") -> Factorizations:
    if phase_mode not in PHASE_MODES:
        raise InvalidArgument(f"phase_mode must be one of {PHASE_MODES}, got {phase_mode!r}")
    hs, rs = [], []
    for h in range(1, y + 1):
        r = np.arange(1, y // h + 1, dtype=np.int64)
        hs.append(np.full(r.size, h, dtype=np.int64))
        rs.append(r)
    h = np.concatenate(hs) if hs else np.zeros(0, dtype=np.int64)
    r = np.concatenate(rs) if rs else np.zeros(0, dtype=np.int64)
    n = h * r
    order = np.argsort(n, kind="stable")
    n, h, r = n[order], h[order], r[order]
    if phase_mode == "exact-rational":
        phase = phase_numerator(spec, h, r) / (8.0 * spec.modulus)
    else:
        phase = np.mod(_phase_float(spec, h.astype(float), r.astype(float)), 1.0)
    return Factorizations(y, n, h, r, phase)


@dataclass(frozen=True)
class VoronoiConfig:
    spec: CongruenceSpec
    y: float
    phase_mode: str = "exact-rational"
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.phase_mode not in PHASE_MODES:
            raise InvalidArgument(f"phase_mode must be one of {PHASE_MODES}, got {self.phase_mode!r}")

    def factorizations(self) -> Factorizations:
        if "fac" not in self._cache:
            self._cache["fac"] = build_factorizations(self.spec, max(int(math.floor(self.y)), 0), self.phase_mode)
        return self._cache["fac"]


def psi_finite_expansion(u: float, H: float) -> tuple[float, float]:
    """Truncated Fourier series of the sawtooth and its error budget.

    approx = -sum_{1 <= h <= H} sin(2 pi h u) / (pi h), the real form of
    -sum_{1 <= |h| <= H} e(hu) / (2 pi i h); budget = min(1, 1/(H ||u||)).
    """
    if H < 2:
        raise InvalidArgument(f"H must be >= 2, got {H}")
    approx = float(psi_expansion_array(np.array([u], dtype=float), H)[0])
    dist = nearest_integer_distance(u)
    budget = 1.0 if dist == 0 else min(1.0, 1.0 / (H * dist))
    return approx, budget


def psi_expansion_array(u, H: float, chunk: int = 1 << 22) -> np.ndarray:
    if H < 2:
        raise InvalidArgument(f"H must be >= 2, got {H}")
    u = np.asarray(u, dtype=float)
    frac = u - np.floor(u)
    hs = np.arange(1, int(math.floor(H)) + 1, dtype=float)
    out = np.empty(frac.size)
    step = max(1, chunk // hs.size)
    flat = frac.ravel()
    for start in range(0, flat.size, step):
        block = flat[start : start + step]
        out[start : start + block.size] = -(np.sin(2 * np.pi * np.outer(block, hs)) / hs).sum(axis=1) / np.pi
    return out.reshape(u.shape)


def tau(spec: CongruenceSpec, n: int, x: float) -> float:
    """tau(n, x) summed over every ordered factorization n = h r."""
    if n < 1:
        raise InvalidArgument(f"n must be positive, got {n}")
    if x < 1:
        raise InvalidArgument(f"x must be >= 1, got {x}")
    base = 2.0 * math.sqrt(n * x)
    base -= math.floor(base)
    den = 8 * spec.modulus
    total = 0.0
    for h in range(1, n + 1):
        if n % h:
            continue
        k = phase_numerator(spec, h, n // h)
        total += math.cos(2 * math.pi * (base - k / den))
    return total


def truncated_voronoi(cfg: VoronoiConfig, x) -> float | np.ndarray:
    """R0(x; y) at a scalar or an array of x."""
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if xs.size and xs.min() < 1:
        raise InvalidArgument("x must be >= 1")
    if cfg.y < 1:
        out = np.zeros(xs.shape)
    else:
        fac = cfg.factorizations()
        out = _r0_from_factorizations(fac, xs)
    return float(out[0]) if np.ndim(x) == 0 else out


def _r0_from_factorizations(fac: Factorizations, xs: np.ndarray, chunk: int = 1 << 22) -> np.ndarray:
    sqrt_n = np.sqrt(fac.n.astype(float))
    weight = fac.n.astype(float) ** -0.75
    out = np.empty(xs.size)
    step = max(1, chunk // max(1, fac.n.size))
    for start in range(0, xs.size, step):
        block = xs[start : start + step]
        turns = 2.0 * np.outer(np.sqrt(block), sqrt_n)
        turns -= np.floor(turns)
        vals = np.cos(2 * np.pi * (turns - fac.phase)) @ weight
        out[start : start + block.size] = block**0.25 / (math.sqrt(2) * math.pi) * vals
    return out


@dataclass(frozen=True)
class ResidualRow:
    y: float
    mse_residual: float
    mse_delta: float
    correlation: float


def voronoi_residual_report(spec: CongruenceSpec, T: float, y_list, samples: int, seed: int = 0x5EED_CD41) -> list[ResidualRow]:
    """Quality of R0 as an approximation to Delta on uniform samples from [T/2, T]."""
    if T < 1e3:
        raise InvalidArgument(f"T must be >= 1e3, got {T}")
    if samples < 100:
        raise InvalidArgument(f"samples must be >= 100, got {samples}")
    y_list = list(y_list)
    if not y_list:
        raise InvalidArgument("y_list must not be empty")
    rng = np.random.default_rng(seed)
    xs = np.sort(rng.uniform(T / 2, T, size=samples))
    d = delta_many(spec, xs)
    rows = []
    for y in y_list:
        r0 = truncated_voronoi(VoronoiConfig(spec, y), xs)
        resid = d - r0
        corr = float(np.corrcoef(d, r0)[0, 1]) if np.std(r0) > 0 else 0.0
        rows.append(ResidualRow(float(y), float(np.mean(resid**2)), float(np.mean(d**2)), corr))
    return rows


def r0_envelope(cfg: VoronoiConfig) -> float:
    """sum_{n <= y} d(n) / n**(3/4), the trivial bound for |R0| * sqrt(2) pi / x**(1/4)."""
    if cfg.y < 1:
        return 0.0
    fac = cfg.factorizations()
    return float(np.sum(fac.n.astype(float) ** -0.75))
