"""Power moments of Delta(M1 M2 x; spec) by exact segmentation.

Between consecutive jump points x = n / (M1 M2) the count is a constant A_n
and Delta(x) = A_n - M(x) is smooth, so every segment integral is done by
Gauss-Legendre. Segments are streamed in chunks from the sieve prefix sums.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .constants import c4_estimate
from .core_arith import CongruenceSpec
from .divisor import DEFAULT_MEMORY_CAP, delta_many, main_term_coefficients, sieve_divisor_table
from .errors import InvalidArgument, ResourceLimit

DEFAULT_QUAD_ORDER = 8
_CHUNK = 1 << 16


def _prefix_counts(spec: CongruenceSpec, limit: int, memory_cap: int) -> np.ndarray:
    table = sieve_divisor_table(spec, max(limit, 1), memory_cap=memory_cap)
    return table.prefix()


def _segment_integrals(spec, ks, breaks, counts, quad_order):
    """Integrals of (count - M(x))**k over [breaks[i], breaks[i+1]] for each k."""
    coef = main_term_coefficients(spec)
    nodes, weights = np.polynomial.legendre.leggauss(quad_order)
    left, right = breaks[:-1], breaks[1:]
    half = 0.5 * (right - left)
    # Delta(x) = (A - M(x0)) - [t (log x0 + c_lin) + x log1p(t / x0)], t = x - x0
    log0 = np.log(left)
    d0 = counts - (coef.c_log * left * log0 + coef.c_lin * left + coef.c_const)
    t = half[:, None] * (nodes[None, :] + 1.0)
    x = left[:, None] + t
    dx = d0[:, None] - (t * (coef.c_log * log0[:, None] + coef.c_lin) + coef.c_log * x * np.log1p(t / left[:, None]))
    out = {}
    for k in ks:
        out[k] = (dx**k) @ weights * half
    return out


def _integrate_range(spec, ks, lo, hi, prefix, quad_order):
    mod = spec.modulus
    base = math.floor(lo * mod)
    last = math.ceil(hi * mod) - 1
    n_segments = max(last - base, 0) + 1
    parts = {k: [] for k in ks}
    for a in range(0, n_segments, _CHUNK):
        b = min(n_segments, a + _CHUNK)
        # segment i opens at lo (i = 0) or at the jump (base + i) / mod
        idx = base + np.arange(a, b + 1, dtype=np.int64)
        breaks = idx / mod
        if a == 0:
            breaks[0] = lo
        if b == n_segments:
            breaks[-1] = hi
        seg = _segment_integrals(spec, ks, breaks, prefix[idx[:-1]].astype(float), quad_order)
        for k in ks:
            parts[k].append(seg[k])
    return {k: math.fsum(np.concatenate(parts[k]).tolist()) for k in ks}


def integrate_delta_powers(spec: CongruenceSpec, ks, T1: float, T2: float, quad_order: int = DEFAULT_QUAD_ORDER,
                           memory_cap: int = DEFAULT_MEMORY_CAP, prefix: np.ndarray | None = None,
                           workers: int = 1) -> dict[int, float]:
    """Integrals of Delta**k over [T1, T2] for every k in ``ks`` in a single pass."""
    ks = tuple(ks)
    for k in ks:
        if k not in (1, 2, 3, 4):
            raise InvalidArgument(f"k must be in 1..4, got {k}")
    if not 1 <= T1 < T2:
        raise InvalidArgument(f"need 1 <= T1 < T2, got T1={T1}, T2={T2}")
    if not 4 <= quad_order <= 16:
        raise InvalidArgument(f"quad_order must lie in [4, 16], got {quad_order}")
    limit = math.floor(T2 * spec.modulus)
    if prefix is None:
        if limit + 1 > memory_cap:
            raise ResourceLimit(f"integration to T2={T2} needs {limit + 1} table entries, cap is {memory_cap}")
        prefix = _prefix_counts(spec, limit, memory_cap)
    elif prefix.size < limit + 1:
        raise InvalidArgument("prefix table too short for T2")
    if workers <= 1:
        return _integrate_range(spec, ks, T1, T2, prefix, quad_order)
    # partition on jump points; results are reduced in range order
    mod = spec.modulus
    cuts = np.unique(np.concatenate([[T1], np.floor(np.linspace(T1 * mod, T2 * mod, workers + 1)[1:-1]) / mod, [T2]]))
    cuts = cuts[(cuts >= T1) & (cuts <= T2)]
    with ThreadPoolExecutor(workers) as pool:
        parts = list(pool.map(lambda ab: _integrate_range(spec, ks, ab[0], ab[1], prefix, quad_order), zip(cuts[:-1], cuts[1:])))
    return {k: math.fsum(p[k] for p in parts) for k in ks}


def integrate_delta_power(spec: CongruenceSpec, k: int, T1: float, T2: float, quad_order: int = DEFAULT_QUAD_ORDER,
                          memory_cap: int = DEFAULT_MEMORY_CAP) -> float:
    """Integral of Delta(M1 M2 x; spec)**k over [T1, T2]."""
    return integrate_delta_powers(spec, (k,), T1, T2, quad_order, memory_cap)[k]


def sampled_delta_power(spec: CongruenceSpec, k: int, T1: float, T2: float, samples: int = 10**6, chunk: int = 1 << 17) -> float:
    """Midpoint rule on a uniform grid, Delta evaluated by the hyperbola method."""
    h = (T2 - T1) / samples
    total = 0.0
    for start in range(0, samples, chunk):
        idx = np.arange(start, min(samples, start + chunk))
        total += float(np.sum(delta_many(spec, T1 + (idx + 0.5) * h) ** k))
    return total * h


def fit_power_law(rows) -> tuple[float, float, float]:
    """Least squares of log(value) on log(T): (slope, intercept, slope stderr)."""
    rows = list(rows)
    if len(rows) < 3:
        raise InvalidArgument(f"need at least 3 rows, got {len(rows)}")
    t = np.array([r[0] for r in rows], dtype=float)
    v = np.array([r[1] for r in rows], dtype=float)
    if np.any(v <= 0) or np.any(t <= 0):
        raise InvalidArgument("values and T must be positive")
    x, y = np.log(t), np.log(v)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    dof = len(rows) - 2
    sxx = float(np.sum((x - x.mean()) ** 2))
    stderr = math.sqrt(float(np.sum(resid**2)) / dof / sxx) if dof > 0 and sxx > 0 else 0.0
    return float(slope), float(intercept), stderr


@dataclass
class MomentRow:
    T: float
    integral: float
    predicted: float
    ratio: float
    window_integral: float
    window_predicted: float


@dataclass
class MomentReport:
    spec: CongruenceSpec
    k: int
    rows: list[MomentRow]
    fitted_exponent: float
    fitted_log_slope_stderr: float
    sign: int
    theory_exponent: float
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["spec"] = str(self.spec)
        return out


def theory_exponent(k: int) -> float:
    return 1.0 + k / 4.0


def predicted_fourth_moment(c4: float, T1: float, T2: float) -> float:
    """C4 / (32 pi^4) * integral of x over [T1, T2]."""
    return c4 / (32 * math.pi**4) * (T2 * T2 - T1 * T1) / 2


def moment_experiment(spec: CongruenceSpec, k: int, T_list, y_const: int = 10**4, quad_order: int = DEFAULT_QUAD_ORDER,
                      memory_cap: int = DEFAULT_MEMORY_CAP, workers: int = 1, c4: float | None = None,
                      prefix: np.ndarray | None = None) -> MomentReport:
    """Integrals over [1, T] and [T/2, T] for each T, compared with theory.

    For k = 4 the prediction is C4/(32 pi^4) * int x dx with C4 truncated at
    ``y_const``; for k < 4 the constant is fitted with the exponent pinned at
    1 + k/4, so the ratio column only shows departure from that power law.
    ``prefix`` may supply precomputed cumulative counts reaching M1 M2 max(T).
    """
    if k not in (1, 2, 3, 4):
        raise InvalidArgument(f"supported k are 1..4, got {k}")
    T_list = [float(t) for t in T_list]
    if len(T_list) < 1 or any(b <= a for a, b in zip(T_list, T_list[1:])) or T_list[0] <= 1:
        raise InvalidArgument("T_list must be strictly ascending and > 1")
    top = T_list[-1]
    limit = math.floor(top * spec.modulus)
    if limit + 1 > memory_cap:
        raise ResourceLimit(f"T={top} needs {limit + 1} table entries, cap is {memory_cap}")
    if prefix is None:
        prefix = _prefix_counts(spec, limit, memory_cap)
    elif prefix.size < limit + 1:
        raise InvalidArgument("prefix table too short for the largest T")

    edges = sorted(set([1.0] + T_list + [t / 2 for t in T_list if t / 2 > 1]))
    pieces = {}
    for a, b in zip(edges[:-1], edges[1:]):
        pieces[(a, b)] = integrate_delta_powers(spec, (k,), a, b, quad_order, memory_cap, prefix, workers)[k]

    def over(a, b):
        return math.fsum(v for (lo, hi), v in pieces.items() if lo >= a and hi <= b)

    full = [over(1.0, t) for t in T_list]
    window = [over(max(1.0, t / 2), t) for t in T_list]
    th = theory_exponent(k)
    config = {"y_const": y_const, "quad_order": quad_order, "memory_cap": memory_cap, "workers": workers,
              "T_list": T_list}
    if k == 4:
        if c4 is None:
            c4 = c4_estimate(spec, y_const).c4
        config["c4"] = c4
        predicted = [predicted_fourth_moment(c4, 1.0, t) for t in T_list]
        window_pred = [predicted_fourth_moment(c4, max(1.0, t / 2), t) for t in T_list]
    else:
        mags = np.abs(np.array(full))
        if len(T_list) and np.all(mags > 0):
            log_c = float(np.mean(np.log(mags) - th * np.log(T_list)))
        else:
            log_c = float("-inf")
        scale = math.exp(log_c) * (1 if np.sum(full) >= 0 else -1)
        config["fitted_constant"] = scale
        predicted = [scale * t**th for t in T_list]
        window_pred = [scale * (t**th - (t / 2) ** th) for t in T_list]
    rows = [MomentRow(t, f, p, f / p if p else float("nan"), w, wp)
            for t, f, p, w, wp in zip(T_list, full, predicted, window, window_pred)]
    sign = int(np.sign(full[-1]))
    if len(T_list) >= 3 and all(abs(f) > 0 for f in full):
        exponent, _, stderr = fit_power_law([(t, abs(f)) for t, f in zip(T_list, full)])
    else:
        exponent, stderr = float("nan"), float("nan")
    return MomentReport(spec, k, rows, exponent, stderr, sign, th, config)


def oscillatory_integral(T: float, alpha: float, A: float, B: float, pieces: int = 400, order: int = 48) -> float:
    """Integral of t**alpha cos(A sqrt t + B) over [T, 2T], via u = sqrt t and composite Gauss-Legendre."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(math.sqrt(T), math.sqrt(2 * T), pieces + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    u = mid[:, None] + half[:, None] * nodes[None, :]
    vals = 2 * u ** (2 * alpha + 1) * np.cos(A * u + B)
    return float(np.sum((vals @ weights) * half))


def first_derivative_constant(T: float = 1e4, alphas=(0.0, 0.25), As=(0.1, 1.0, 10.0), Bs=(0.0, 1.0)) -> tuple[float, list]:
    """Smallest C with |integral| <= C T^(1/2+alpha) / |A| over the grid, plus per-case ratios."""
    cases = []
    for alpha in alphas:
        for A in As:
            for B in Bs:
                value = oscillatory_integral(T, alpha, A, B)
                cases.append((alpha, A, B, value, abs(value) * abs(A) / T ** (0.5 + alpha)))
    return max(c[-1] for c in cases), cases
