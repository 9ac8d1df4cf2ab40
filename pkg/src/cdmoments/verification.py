"""Acceptance checks shared by the test suite and ``cdm verify``.

Every check returns a CriterionResult; nothing here raises on a failed
criterion, so a run always reports all of them.
"""

from __future__ import annotations

import io
import itertools
import math
import tempfile
import time
from contextlib import redirect_stdout
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import cache
from .constants import all_sign_vectors, build_twisted_weights, c4_estimate, s4v_bruteforce, s4v_truncated
from .core_arith import CongruenceSpec, sawtooth_array
from .divisor import (delta_many, eval_F12, eval_F21, main_term_coefficients, sieve_divisor_table,
                      summatory_hyperbola_many)
from .moments import (first_derivative_constant, fit_power_law, integrate_delta_power, integrate_delta_powers,
                      moment_experiment, sampled_delta_power)
from .relations import (NearRelationQuery, brute_force_near_count, brute_force_relations, build_kernel_index,
                        count_near_relations, min_nonzero_gap, relation_set)
from .voronoi import psi_expansion_array

DEFAULT_SEED = 0x5EED_CD41

MAIN_TERM_SPECS = (CongruenceSpec(1, 1, 1, 1), CongruenceSpec(1, 2, 1, 2), CongruenceSpec(1, 3, 2, 4),
                   CongruenceSpec(2, 5, 1, 3))
DEFECT_SPECS = MAIN_TERM_SPECS + (CongruenceSpec(3, 4, 1, 1),)
SERIES_SPECS = (CongruenceSpec(1, 1, 1, 1), CongruenceSpec(1, 2, 1, 2), CongruenceSpec(1, 3, 2, 4),
                CongruenceSpec(2, 5, 1, 3), CongruenceSpec(3, 4, 1, 6), CongruenceSpec(1, 4, 3, 4))
NEAR_WINDOWS = (1e-3, 1e-2, 1e-1, 1.0)
DYADIC_SIDES = (1, 2, 4, 8, 16)


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float = 0.0
    metrics: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.number:2d} {self.title}: {self.detail} ({self.seconds:.1f} s)"


def random_specs(count: int, max_modulus: int, seed: int) -> list[CongruenceSpec]:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        m1, m2 = (int(v) for v in rng.integers(1, max_modulus + 1, size=2))
        l1, l2 = int(rng.integers(1, m1 + 1)), int(rng.integers(1, m2 + 1))
        out.append(CongruenceSpec(l1, m1, l2, m2))
    return out


def check_sieve_hyperbola(seed: int = DEFAULT_SEED, limit: int = 10**5, count: int = 10) -> CriterionResult:
    specs = random_specs(count, 6, seed)
    limits = np.arange(1, limit + 1, dtype=np.int64)
    mismatched = []
    for spec in specs:
        prefix = sieve_divisor_table(spec, limit).prefix()
        if not np.array_equal(summatory_hyperbola_many(spec, limits), prefix[1:]):
            mismatched.append(str(spec))
    passed = not mismatched
    detail = f"{count} specs, every X <= {limit}" + ("" if passed else f"; mismatch for {mismatched}")
    return CriterionResult(1, "sieve/hyperbola equivalence", passed, detail,
                           metrics={"specs": [str(s) for s in specs]})


def fit_main_term(spec: CongruenceSpec, x_max: float = 1e5, samples: int = 2 * 10**6) -> np.ndarray:
    """Least squares of a x log x + b x + c against the exact count on a uniform grid."""
    mod = spec.modulus
    prefix = sieve_divisor_table(spec, math.floor(x_max * mod)).prefix()
    xs = np.linspace(1.0, x_max, samples)
    counts = prefix[np.floor(xs * mod).astype(np.int64)].astype(float)
    design = np.stack([xs * np.log(xs), xs, np.ones_like(xs)], axis=1)
    return np.linalg.lstsq(design, counts, rcond=None)[0]


def _same_3_digits(value: float, target: float) -> bool:
    return abs(value - target) <= 5e-4 * max(abs(target), 1e-300)


def check_main_term_fit() -> CriterionResult:
    rows, passed = [], True
    for spec in MAIN_TERM_SPECS:
        a, b, c = fit_main_term(spec)
        coef = main_term_coefficients(spec)
        ok = _same_3_digits(a, coef.c_log) and _same_3_digits(b, coef.c_lin) and abs(c - coef.c_const) <= 0.5
        passed &= ok
        rows.append({"spec": str(spec), "fit": [a, b, c], "expected": [coef.c_log, coef.c_lin, coef.c_const]})
    worst_c = max(abs(r["fit"][2] - r["expected"][2]) for r in rows)
    return CriterionResult(2, "main-term fit", passed, f"4 specs, worst |c error| = {worst_c:.3g}", metrics={"rows": rows})


def decomposition_defect(spec: CongruenceSpec, points: int = 1000) -> tuple[float, float]:
    xs = np.geomspace(1e2, 1e6, points)
    d = delta_many(spec, xs)
    f = np.array([eval_F12(spec, x) + eval_F21(spec, x) for x in xs])
    defect = np.abs(d - f)
    slope = float(np.polyfit(np.log(xs), defect, 1)[0])
    return float(defect.max()), slope


def check_decomposition_defect() -> CriterionResult:
    passed, rows = True, []
    for spec in DEFECT_SPECS:
        worst, slope = decomposition_defect(spec)
        passed &= worst <= 5 and abs(slope) <= 0.05
        rows.append({"spec": str(spec), "max": worst, "slope": slope})
    worst = max(r["max"] for r in rows)
    slope = max(abs(r["slope"]) for r in rows)
    return CriterionResult(3, "decomposition defect", passed, f"max |defect| = {worst:.3f}, max |slope| = {slope:.2g}",
                           metrics={"rows": rows})


def psi_expansion_constant(points: int = 10**4, Hs=(10, 100, 1000)) -> float:
    u = (np.arange(points) + 0.5) / points
    dist = np.minimum(u, 1 - u)
    worst = 0.0
    for H in Hs:
        err = np.abs(psi_expansion_array(u, H) - sawtooth_array(u))
        worst = max(worst, float(np.max(err / np.minimum(1.0, 1.0 / (H * dist)))))
    return worst


def check_psi_expansion() -> CriterionResult:
    const = psi_expansion_constant()
    return CriterionResult(4, "sawtooth expansion constant", const <= 10, f"C = {const:.4f}", metrics={"C": const})


def check_relations() -> CriterionResult:
    bad = []
    for y in (9, 30, 60, 200):
        index = build_kernel_index(y)
        for shape in ("two-two", "three-one"):
            if relation_set(index, shape) != brute_force_relations(y, shape):
                bad.append(f"enumerate y={y} {shape}")
    boxes = 0
    for pattern in ("++--", "+++-"):
        for window in NEAR_WINDOWS:
            for sides in itertools.product(DYADIC_SIDES, repeat=4):
                query = NearRelationQuery(sides, window, pattern)
                boxes += 1
                if count_near_relations(query) != brute_force_near_count(query):
                    bad.append(f"near {sides} {window} {pattern}")
    passed = not bad
    detail = f"enumerators to y = 200, {boxes} near-count boxes" + ("" if passed else f"; mismatches {bad[:5]}")
    return CriterionResult(5, "relation enumerators and near counts", passed, detail)


def check_kong_gap(bound: int = 300) -> CriterionResult:
    rows, passed = [], True
    for pattern in ("++--", "+++-"):
        res = min_nonzero_gap(bound, pattern)
        passed &= res.kong_ratio >= 0.05
        rows.append({"pattern": pattern, "gap": res.gap, "witness": list(res.witness), "kong_ratio": res.kong_ratio})
    detail = ", ".join(f"{r['pattern']} ratio {r['kong_ratio']:.3f}" for r in rows)
    return CriterionResult(6, "gap lower bound", passed, detail, metrics={"rows": rows})


def check_series_oracle() -> CriterionResult:
    worst_oracle = worst_sign = 0.0
    for spec in SERIES_SPECS:
        for y in (9, 20, 50):
            weights = build_twisted_weights(spec, y)
            for v in (1, 2, 3):
                fast = s4v_truncated(weights, v).value
                brute = [s4v_bruteforce(spec, v, y, signs) for signs in all_sign_vectors(v)]
                worst_oracle = max(worst_oracle, abs(fast - brute[0]))
                worst_sign = max(worst_sign, max(abs(b - brute[0]) for b in brute))
    worst_sym = 0.0
    for spec in SERIES_SPECS:
        weights = build_twisted_weights(spec, 500)
        worst_sym = max(worst_sym, abs(s4v_truncated(weights, 1).value - s4v_truncated(weights, 3).value))
    passed = worst_oracle <= 1e-10 and worst_sign <= 1e-12 and worst_sym <= 1e-12
    detail = f"oracle {worst_oracle:.1e}, sign patterns {worst_sign:.1e}, v=1 vs v=3 {worst_sym:.1e}"
    return CriterionResult(7, "series oracle equivalence", passed, detail)


def c4_scaled_increments(spec: CongruenceSpec, ys=(250, 500, 1000, 2000)) -> list[float]:
    values = {y: c4_estimate(spec, y).c4 for y in sorted(set(ys) | {2 * y for y in ys})}
    return [abs(values[2 * y] - values[y]) * math.sqrt(y) for y in ys]


def check_c4_convergence(spec: CongruenceSpec = CongruenceSpec(1, 1, 1, 1)) -> CriterionResult:
    ys = (250, 500, 1000, 2000)
    scaled = c4_scaled_increments(spec, ys)
    slope = float(np.polyfit(np.log(ys), np.log(scaled), 1)[0])
    passed = slope <= 0
    detail = "scaled increments " + ", ".join(f"{s:.0f}" for s in scaled) + f"; log-log slope {slope:+.3f}"
    return CriterionResult(8, "C4 truncation rate", passed, detail, metrics={"scaled": scaled, "slope": slope})


def check_moments(T_list=(1e4, 1e5, 1e6), y_const: int = 10**4, workers: int = 1) -> CriterionResult:
    spec = CongruenceSpec(1, 1, 1, 1)
    reports = {k: moment_experiment(spec, k, T_list, y_const=y_const, workers=workers) for k in (1, 2, 3, 4)}
    ranges = {2: (1.40, 1.60), 3: (1.60, 1.90), 4: (1.85, 2.15)}
    failures, parts = [], []
    for k, (lo, hi) in ranges.items():
        e = reports[k].fitted_exponent
        parts.append(f"k={k} exponent {e:.3f}")
        if not lo <= e <= hi:
            failures.append(f"k={k} exponent {e:.3f} outside [{lo}, {hi}]")
    first = [abs(r.integral) / r.T**0.75 for r in reports[1].rows]
    first_slope = fit_power_law(list(zip(T_list, first)))[0] if all(v > 0 for v in first) else 0.0
    parts.append(f"k=1 scaled {', '.join(f'{v:.3f}' for v in first)}")
    if first_slope > 0.05:
        failures.append(f"k=1 scaled first moment grows (slope {first_slope:.3f})")
    ratios = [r.ratio for r in reports[4].rows]
    parts.append(f"k=4 ratios {', '.join(f'{r:.3f}' for r in ratios)}")
    if not 0.5 <= ratios[-1] <= 1.6:
        failures.append(f"ratio {ratios[-1]:.3f} at T={T_list[-1]:g} outside [0.5, 1.6]")
    if not abs(ratios[-1] - 1) < abs(ratios[0] - 1):
        failures.append(f"|ratio - 1| grows from {abs(ratios[0] - 1):.3f} to {abs(ratios[-1] - 1):.3f}")
    detail = "; ".join(parts) + ("" if not failures else " | FAILED: " + "; ".join(failures))
    return CriterionResult(9, "moment exponents and fourth-moment ratio", not failures, detail,
                           metrics={k: rep.to_dict() for k, rep in reports.items()})


def check_segment_integrator() -> CriterionResult:
    spec = CongruenceSpec(1, 1, 1, 1)
    split = integrate_delta_powers(spec, (1, 2, 3, 4), 1e3, 1.5e3)
    rest = integrate_delta_powers(spec, (1, 2, 3, 4), 1.5e3, 2e3)
    whole = integrate_delta_powers(spec, (1, 2, 3, 4), 1e3, 2e3)
    additivity = max(abs(split[k] + rest[k] - whole[k]) / abs(whole[k]) for k in (2, 4))
    sampled = abs(sampled_delta_power(spec, 4, 1e3, 2e3) - whole[4]) / abs(whole[4])
    order16 = integrate_delta_power(spec, 4, 1e3, 2e3, quad_order=16)
    orders = abs(order16 - whole[4]) / abs(whole[4])
    passed = additivity <= 1e-12 and sampled <= 1e-3 and orders <= 1e-10
    detail = f"additivity {additivity:.1e}, sampling oracle {sampled:.1e}, order 8 vs 16 {orders:.1e}"
    return CriterionResult(10, "segment integrator self-tests", passed, detail)


def check_first_derivative_bound(T: float = 1e4) -> CriterionResult:
    const, _ = first_derivative_constant(T)
    return CriterionResult(11, "oscillatory integral bound", const <= 5, f"C = {const:.3f} at T = {T:g}",
                           metrics={"C": const})


def _run_cli(argv) -> tuple[int, bytes]:
    from .cli import main

    buffer = io.StringIO()
    with redirect_stdout(buffer):
        code = main(list(argv))
    return code, buffer.getvalue().encode()


def check_cli_cache() -> CriterionResult:
    problems = []
    with tempfile.TemporaryDirectory() as tmp:
        base = ["--cache-dir", tmp, "--seed", "7"]
        for argv in (["delta", "--spec", "1,3,2,4", "--grid", "10:1e4:25:log"],
                     ["c4", "--spec", "1,2,1,2", "--y", "300"],
                     ["moment", "--spec", "1,1,1,1", "--k", "2", "--T", "1e3,2e3,4e3", "--workers", "3"]):
            first = _run_cli(base + argv)
            second = _run_cli(base + argv)
            if first[0] != 0 or first != second:
                problems.append(f"rerun of {argv[0]} differs")
        spec = CongruenceSpec(1, 3, 2, 4)
        objects = (("divisor-table", sieve_divisor_table(spec, 5000)),
                   ("kernel-index", build_kernel_index(3000)),
                   ("weight-table", build_twisted_weights(spec, 400)))
        dumps = {"divisor-table": cache.dump_divisor_table, "kernel-index": cache.dump_kernel_index,
                 "weight-table": cache.dump_weight_table}
        loads = {"divisor-table": cache.load_divisor_table, "kernel-index": cache.load_kernel_index,
                 "weight-table": cache.load_weight_table}
        for kind, obj in objects:
            path = Path(tmp) / f"roundtrip-{kind}.cdm"
            cache.write_atomic(path, dumps[kind](obj))
            blob = path.read_bytes()
            if dumps[kind](loads[kind](blob)) != blob:
                problems.append(f"{kind} round-trip not bit-exact")
            corrupt = bytearray(blob)
            corrupt[-1] ^= 0x01
            try:
                loads[kind](bytes(corrupt))
                problems.append(f"corrupted {kind} accepted")
            except cache.CacheRejected:
                pass
    passed = not problems
    detail = "reruns byte-identical, round-trips bit-exact, corruption refused" if passed else "; ".join(problems)
    return CriterionResult(12, "CLI determinism and cache integrity", passed, detail)


CHECKS = {
    1: check_sieve_hyperbola,
    2: check_main_term_fit,
    3: check_decomposition_defect,
    4: check_psi_expansion,
    5: check_relations,
    6: check_kong_gap,
    7: check_series_oracle,
    8: check_c4_convergence,
    9: check_moments,
    10: check_segment_integrator,
    11: check_first_derivative_bound,
    12: check_cli_cache,
}

# the quick level leaves out only the T = 1e6 moment run
LEVELS = {"quick": tuple(n for n in CHECKS if n != 9), "full": tuple(CHECKS)}


def run_criterion(number: int, **kwargs) -> CriterionResult:
    start = time.perf_counter()
    result = CHECKS[number](**kwargs)
    result.seconds = time.perf_counter() - start
    return result


def run_level(level: str, seed: int = DEFAULT_SEED, workers: int = 1, report=None) -> list[CriterionResult]:
    results = []
    for number in LEVELS[level]:
        kwargs = {"seed": seed} if number == 1 else {"workers": workers} if number == 9 else {}
        result = run_criterion(number, **kwargs)
        if report is not None:
            report(result)
        results.append(result)
    return results
