"""Acceptance criteria, one test per criterion.

Each test records a single ``PASS``/``FAIL`` line (echoed in the pytest
terminal summary, or printed when run as a script) and then asserts.
Tolerances are the published ones; nothing is loosened to make a line pass.
"""
from __future__ import annotations

import hashlib
import json
import math
import random
import sys
import time
from fractions import Fraction
from pathlib import Path

import mpmath

from nssapprox import ProblemModel, enumerate_active_set, power
from nssapprox.active_set import (brute_force_active_set,
                                  count_envelope_ratios, max_level, single_coordinate_count)
from nssapprox.anova import estimate_rate, tradeoff_curve, worst_case_error
from nssapprox.cli import main as cli_main
from nssapprox.cost import CostFunction, algorithm_cost
from nssapprox.non_anova import certified_non_anova_approximation, comparison_gap
from nssapprox.sequences import (PowerLogSequence, TableSequence, block_points, check_sandwich,
                                 dyadic_points, estimate_decay_low, estimate_decay_up,
                                 remark_block_sequence)
from nssapprox.weights import c_gamma_constant, c_gamma_steps, term_score

sys.path.insert(0, str(Path(__file__).resolve().parent))
from oracles import exact_active_set, inv_power, min_cost_subset  # noqa: E402

RESULTS: list[str] = []
SEED = 20240611
RATE_GRID = [2.0 ** -k for k in range(1, 15)]          # eps = 2^-1 ... 2^-14
RATE_TOL = 0.12
RATE_TIME_LIMIT = 300.0
ORACLE_CONFIGS = 200
ORACLE_TIME_LIMIT = 60.0
ENVELOPE_BAND = 4.0
UNIVERSES = 50
UNIVERSE_MAX_TERMS = 12
DECAY_HORIZON = 1 << 20
DECAY_TOL = 0.1
C_GAMMA_REL_TOL = 1e-6

linear = CostFunction.poly(1)


def _record(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


# 1 -------------------------------------------------------------------------

def test_criterion_1_oracle_equivalence():
    rng = random.Random(SEED)
    mismatches = 0
    start = time.perf_counter()
    for _ in range(ORACLE_CONFIGS):
        a, b = 1.0 - rng.random(), 1.0 - rng.random()          # (0, 1]
        p, q = rng.uniform(1.5, 4.0), rng.uniform(1.5, 4.0)
        eps = rng.uniform(0.05, 0.9)
        m = ProblemModel(power(p, a), power(q, b))
        # the smallest sound box: nothing past max_level, nothing past the first-coordinate count
        box_coord = max_level(m, eps)
        box_index = max(1, single_coordinate_count(m, eps, 1))
        if list(enumerate_active_set(m, eps).terms) != \
                brute_force_active_set(m, eps, box_coord, box_index):
            mismatches += 1
    elapsed = time.perf_counter() - start
    _record(1, mismatches == 0 and elapsed < ORACLE_TIME_LIMIT,
            f"{ORACLE_CONFIGS} configs, {mismatches} mismatches, {elapsed:.2f}s "
            f"(limit {ORACLE_TIME_LIMIT:g}s)")


# 2 -------------------------------------------------------------------------

def test_criterion_2_worked_instance():
    m = ProblemModel(power(2), power(2))
    a = enumerate_active_set(m, eps_sq=0.01)
    want = {1: 9, 2: 12, 3: 10, 4: 7, 5: 2, 6: 2, 7: 2, 8: 2, 9: 2}
    terms, frontier = exact_active_set(inv_power(2), inv_power(2), Fraction(1, 100), 12, 128)
    err = worst_case_error(m, eps_sq=0.01)
    checks = {
        "m_eps": a.m_eps == 9,
        "level counts": a.level_counts == want,
        "49 terms": len(a) == 49 == len(terms),
        "cost 162": algorithm_cost(a, linear) == 162,
        "error <= 0.1": err <= 0.1,
        "error^2 = frontier": a.largest_excluded_score == float(frontier)
        and err == math.sqrt(float(frontier)),
    }
    bad = [k for k, v in checks.items() if not v]
    _record(2, not bad, f"m_eps={a.m_eps} terms={len(a)} cost={algorithm_cost(a, linear):g} "
                        f"error={err:.17g}" + (f" failed: {bad}" if bad else ""))


# 3 -------------------------------------------------------------------------

def test_criterion_3_rates():
    parts, ok = [], True
    for d_gamma, target in ((3, 0.75), (6, 1.0)):
        t0 = time.perf_counter()
        pts = tradeoff_curve(ProblemModel(power(d_gamma), power(2)), linear, RATE_GRID)
        fit = estimate_rate(pts)
        elapsed = time.perf_counter() - t0
        good = abs(fit.rate - target) <= RATE_TOL and elapsed < RATE_TIME_LIMIT
        ok &= good
        parts.append(f"j^-{d_gamma}: rate {fit.rate:.3f} vs {target} +- {RATE_TOL} "
                     f"({fit.n_points} corners, {elapsed:.1f}s)")
    _record(3, ok, "; ".join(parts))


# 4 -------------------------------------------------------------------------

def _spread(xs):
    return max(xs) / min(xs)


def test_criterion_4_envelopes():
    parts, ok = [], True
    for d_gamma in (3, 6):
        m = ProblemModel(power(d_gamma), power(2))
        lv = {}
        for p in (d_gamma - 0.2, d_gamma + 0.2):
            lv[p] = [max_level(m, e) * e ** (2.0 / p) for e in RATE_GRID]
        nbar = []
        for e in RATE_GRID:
            nbar.extend(count_envelope_ratios(m, e, 2.0))
        below, above = lv[d_gamma - 0.2], lv[d_gamma + 0.2]
        good = (_spread(below) <= ENVELOPE_BAND and _spread(above) <= ENVELOPE_BAND
                and 1 / ENVELOPE_BAND <= min(nbar) and max(nbar) <= ENVELOPE_BAND
                and _spread(nbar) <= ENVELOPE_BAND)
        ok &= good
        parts.append(f"j^-{d_gamma}: m_eps band {_spread(below):.2f}/{_spread(above):.2f}, "
                     f"n_k ratios [{min(nbar):.3f}, {max(nbar):.3f}]")
    _record(4, ok, "; ".join(parts) + f" (band {ENVELOPE_BAND:g})")


# 5 -------------------------------------------------------------------------

def _universe(rng):
    while True:
        ng, nl = rng.randint(1, 4), rng.randint(1, 11)
        n_terms = sum(math.comb(ng, r) * nl ** r for r in range(ng + 1))
        if n_terms > UNIVERSE_MAX_TERMS:
            continue
        g = sorted((rng.uniform(0.05, 1.0) for _ in range(ng)), reverse=True)
        lam = sorted((rng.uniform(0.05, 1.0) for _ in range(nl)), reverse=True)
        return ProblemModel(TableSequence(table=tuple(g)), TableSequence(table=tuple(lam)))


def test_criterion_5_cost_optimality():
    rng = random.Random(SEED + 5)
    beaten, sizes = 0, []
    for _ in range(UNIVERSES):
        m = _universe(rng)
        fn = CostFunction.poly(rng.choice([0.5, 1.0, 2.0, 3.0]))
        universe = enumerate_active_set(m, eps_sq=1e-300)
        sizes.append(len(universe))
        scores = [term_score(m, t) for t in universe.terms]
        costs = [fn(t.level) for t in universe.terms]
        eps = rng.uniform(0.05, 0.95)
        best = min_cost_subset(scores, costs, eps * eps)
        if best < algorithm_cost(enumerate_active_set(m, eps), fn):
            beaten += 1
    _record(5, beaten == 0 and max(sizes) <= UNIVERSE_MAX_TERMS,
            f"{UNIVERSES} universes of {min(sizes)}..{max(sizes)} terms, "
            f"{beaten} cheaper subsets found")


# 6 -------------------------------------------------------------------------

def test_criterion_6_decay_estimators():
    fixtures = {
        "j^-1.5": power(1.5), "j^-2": power(2), "0.5 j^-3": power(3, 0.5), "j^-4": power(4),
        "j^-2 log": PowerLogSequence(exponent=2.0, log_power=1.0),
        "block": remark_block_sequence(),
    }
    h = DECAY_HORIZON
    order_ok = all(estimate_decay_low(x, h) <= estimate_decay_up(x, h)
                   for x in fixtures.values())
    recovered = {}
    for p, x in ((1.5, power(1.5)), (2.0, power(2)), (3.0, power(3, 0.5)), (4.0, power(4))):
        pts = dyadic_points(h, start=1 << 10)
        lo, up = estimate_decay_low(x, h, pts), estimate_decay_up(x, h, pts)
        sw = check_sandwich(x, p + DECAY_TOL, p - DECAY_TOL, h)
        recovered[p] = (abs(lo - p) <= DECAY_TOL and abs(up - p) <= DECAY_TOL and sw.holds)
    y = remark_block_sequence()
    pre, starts = block_points("pre_jump"), block_points("block_start")
    block_lo = estimate_decay_low(y, pre[-1], pre)
    block_up = estimate_decay_up(y, starts[-1], starts)
    ok = order_ok and all(recovered.values()) and block_lo <= 1.1 and block_up >= 10
    _record(6, ok, f"low<=up on {len(fixtures)} fixtures: {order_ok}; power exponents within "
                   f"{DECAY_TOL} at 2^20: {all(recovered.values())}; block low {block_lo:.3f} "
                   f"(<=1.1), up {block_up:.2f} (>=10)")


# 7 -------------------------------------------------------------------------

def test_criterion_7_non_anova():
    m = ProblemModel(power(3), power(2))
    cg = c_gamma_constant(m, 0.5, rel_tol=C_GAMMA_REL_TOL)
    steps = [b for _, b in zip(range(40), c_gamma_steps(m, 0.5))]
    nested = all(b.lo >= a.lo and b.hi <= a.hi for a, b in zip(steps, steps[1:]))
    mpmath.mp.dps = 30
    oracle = float(mpmath.exp(mpmath.nsum(lambda j: mpmath.log1p(j ** -1.5), [1, mpmath.inf],
                                          method="euler-maclaurin")))
    certified = cg.lo <= oracle <= cg.hi and cg.hi <= cg.lo * (1 + C_GAMMA_REL_TOL)
    bounds_ok = all(
        certified_non_anova_approximation(m, e, linear, 0.5, collect=False)
        .certified_error_bound == math.sqrt(cg.hi) * e for e in (0.5, 0.1, 0.02))
    gap = comparison_gap(2, 2, 2)
    gap_ok = (abs(gap.anova_rate - 1 / 3) < 1e-15 and gap.non_anova_upper == 0.25
              and gap.anova_rate > gap.non_anova_upper and gap.strict)
    _record(7, nested and certified and bounds_ok and gap_ok,
            f"C_gamma in [{cg.lo:.9f}, {cg.hi:.9f}] (oracle {oracle:.9f}, nested {nested}); "
            f"bound = sqrt(C)*eps: {bounds_ok}; gap {gap.anova_rate:.4f} > "
            f"{gap.non_anova_upper:.4f} strict={gap.strict}")


# 8 -------------------------------------------------------------------------

def _digest(directory: Path) -> dict:
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(directory.iterdir())}


def test_criterion_8_determinism(tmp_path):
    cfg = {
        "model": {"gamma": {"kind": "power", "params": {"exponent": 3}},
                  "lambda": {"kind": "power", "params": {"exponent": 2}}},
        "cost": {"kind": "poly", "s": 1},
        "eps": 0.05,
        "eps_grid": {"start": 0.5, "stop": 2.0 ** -10, "factor": 0.5},
        "non_anova": {"c": 0.5},
        "witness": {"h_norm_sq": 1.0, "c1": 0.5, "budget_grid": [10, 100, 1000, 10000]},
        "compare": {"d_gamma": [1.5, 2, 3], "d_lambda": [2], "s": [1, 2]},
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    cmds = ("enumerate", "curve", "rates", "bounds", "nonanova", "witness", "compare")
    runs = []
    for tag, threads in (("a", 1), ("b", 1), ("c", 4)):
        out = tmp_path / tag
        codes = [cli_main([c, "--config", str(path), "--out", str(out), "--threads",
                           str(threads)]) for c in cmds]
        assert codes == [0] * len(cmds)
        runs.append(_digest(out))
    same = runs[0] == runs[1] == runs[2]
    _record(8, same, f"{len(runs[0])} files from {len(cmds)} subcommands byte-identical "
                     f"across 2 runs and threads 1/4: {same}")


if __name__ == "__main__":
    import tempfile

    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_criterion_")]
    failed = 0
    for fn in tests:
        try:
            if "tmp_path" in fn.__code__.co_varnames[:fn.__code__.co_argcount]:
                with tempfile.TemporaryDirectory() as d:
                    fn(Path(d))
            else:
                fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
