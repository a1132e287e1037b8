"""The optimal algorithm for ANOVA spaces and its cost/error accounting.

Functions are held in spectral form: coefficients against the orthonormal
eigensystem xi_{u,j} of the weighted space.  The optimal algorithm keeps the
coefficients of the active set and drops the rest, so every error below is
exact rather than sampled.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .active_set import (DEFAULT_TERM_BUDGET, ActiveSetSummary, _threshold,
                         count_active_set, enumerate_active_set)
from .cost import CostFunction, CostMode, algorithm_cost
from .errors import InvalidArgument
from .weights import ProblemModel, Term, product_weight, eigen_product, term_score


class CoefficientFunction:
    """Finite map Term -> coefficient, iterated in canonical term order."""

    __slots__ = ("_coeffs",)

    def __init__(self, coeffs: Mapping[Term, float] | Iterable[tuple[Term, float]] = ()):
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        out: dict = {}
        for t, c in items:
            if not isinstance(t, Term):
                raise InvalidArgument(f"not a Term: {t!r}")
            if t in out:
                raise InvalidArgument(f"duplicate term {t}")
            c = float(c)
            if not math.isfinite(c):
                raise InvalidArgument(f"non-finite coefficient on {t}")
            out[t] = c
        self._coeffs = dict(sorted(out.items(), key=lambda kv: kv[0].sort_key()))

    @classmethod
    def single(cls, t: Term, c: float = 1.0) -> "CoefficientFunction":
        return cls({t: c})

    def __getitem__(self, t: Term) -> float:
        return self._coeffs.get(t, 0.0)

    def __contains__(self, t: Term) -> bool:
        return t in self._coeffs

    def __iter__(self):
        return iter(self._coeffs)

    def __len__(self):
        return len(self._coeffs)

    def items(self):
        return self._coeffs.items()

    def __eq__(self, other):
        if not isinstance(other, CoefficientFunction):
            return NotImplemented
        return self._nonzero() == other._nonzero()

    def _nonzero(self) -> dict:
        return {t: c for t, c in self._coeffs.items() if c != 0.0}

    def __repr__(self):
        return f"CoefficientFunction({len(self)} terms)"

    def __add__(self, other: "CoefficientFunction") -> "CoefficientFunction":
        out = dict(self._coeffs)
        for t, c in other.items():
            out[t] = out.get(t, 0.0) + c
        return CoefficientFunction(out)

    def scaled(self, a: float) -> "CoefficientFunction":
        return CoefficientFunction({t: a * c for t, c in self._coeffs.items()})

    def restrict(self, keep) -> "CoefficientFunction":
        return CoefficientFunction({t: c for t, c in self._coeffs.items() if keep(t)})

    def norm_sq(self) -> float:
        """Squared norm in the weighted space (Parseval in the xi basis)."""
        return math.fsum(c * c for c in self._coeffs.values())


def _keeps(model: ProblemModel, t: float):
    def keep(term: Term) -> bool:
        if not term.u:
            return 1.0 > t
        return term_score(model, term) > t
    return keep


def apply_optimal(model: ProblemModel, eps: float | None, f: CoefficientFunction, *,
                  eps_sq: float | None = None) -> CoefficientFunction:
    """Restriction of f to the active set for eps."""
    _, t = _threshold(eps, eps_sq)
    return f.restrict(_keeps(model, t))


def exact_l2_error_sq(model: ProblemModel, eps: float | None, f: CoefficientFunction, *,
                      eps_sq: float | None = None, path: str = "global") -> float:
    """||S f - A f||^2 in L2.

    ``path="global"`` sums score * c**2 over the dropped terms.
    ``path="blockwise"`` works one coordinate set u at a time: it rescales to
    the unweighted eigenbasis (coefficient c * sqrt(gamma_u)), truncates the
    block at eigenvalue eps**2 / gamma_u and adds up the block errors.
    """
    _, t = _threshold(eps, eps_sq)
    if path == "global":
        keep = _keeps(model, t)
        return math.fsum(term_score(model, term) * c * c
                         for term, c in f.items() if not keep(term))
    if path != "blockwise":
        raise InvalidArgument(f"unknown path {path!r}")
    blocks: dict = {}
    for term, c in f.items():
        blocks.setdefault(term.u, []).append((term.j, c))
    per_block = []
    for u, entries in sorted(blocks.items(), key=lambda kv: (len(kv[0]), kv[0])):
        gu = product_weight(model, u)
        cut = t / gu
        errs = []
        for j, c in entries:
            lam = eigen_product(model, j)
            if lam > cut:
                continue
            a = c * math.sqrt(gu)
            errs.append(lam * a * a)
        per_block.append(math.fsum(errs))
    return math.fsum(per_block)


def worst_case_error(model: ProblemModel, eps: float | None = None, *,
                     eps_sq: float | None = None,
                     term_budget: int = DEFAULT_TERM_BUDGET) -> float:
    """sqrt of the largest excluded score; never above eps."""
    s = count_active_set(model, eps, eps_sq=eps_sq, term_budget=term_budget)
    return math.sqrt(s.largest_excluded_score)


@dataclass(frozen=True)
class TradeoffPoint:
    epsilon: float
    cost_nss: float
    cost_unrestricted: float
    exact_error: float
    total_terms: int
    m_eps: int

    def cost(self, mode: CostMode | str = CostMode.NSS) -> float:
        return self.cost_nss if CostMode.parse(mode) is CostMode.NSS else self.cost_unrestricted

    def row(self) -> tuple:
        return (self.epsilon, self.m_eps, self.total_terms, self.cost_nss,
                self.cost_unrestricted, self.exact_error)


CURVE_COLUMNS = ("epsilon", "m_eps", "total_terms", "cost_nss", "cost_unrestricted",
                 "exact_error")


def _point(args) -> TradeoffPoint:
    model, costfn, eps, budget = args
    s = count_active_set(model, eps, term_budget=budget)
    return TradeoffPoint(
        epsilon=eps,
        cost_nss=algorithm_cost(s, costfn, CostMode.NSS),
        cost_unrestricted=algorithm_cost(s, costfn, CostMode.UNRESTRICTED),
        exact_error=math.sqrt(s.largest_excluded_score),
        total_terms=s.total_terms, m_eps=s.m_eps)


def check_grid(eps_grid: Sequence[float]) -> list[float]:
    grid = [float(e) for e in eps_grid]
    if not grid:
        raise InvalidArgument("empty eps grid")
    if any(not 0.0 < e < 1.0 for e in grid):
        raise InvalidArgument("eps grid must lie in (0, 1)")
    if any(b >= a for a, b in zip(grid, grid[1:])):
        raise InvalidArgument("eps grid must be strictly decreasing")
    return grid


def tradeoff_curve(model: ProblemModel, costfn: CostFunction, eps_grid: Sequence[float], *,
                   threads: int = 1,
                   term_budget: int = DEFAULT_TERM_BUDGET) -> list[TradeoffPoint]:
    """One point per eps; points are independent and merged in grid order."""
    grid = check_grid(eps_grid)
    jobs = [(model, costfn, e, term_budget) for e in grid]
    if threads <= 1 or len(jobs) == 1:
        return [_point(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(threads, len(jobs))) as pool:
        return list(pool.map(_point, jobs))


@dataclass(frozen=True)
class BudgetOptimum:
    eps_sq: float           # threshold: the chosen set is {score > eps_sq}
    error: float
    cost: float
    total_terms: int

    @property
    def eps_star(self) -> float:
        return math.sqrt(self.eps_sq)


def minimal_error_for_budget(model: ProblemModel, costfn: CostFunction, budget: float,
                             mode: CostMode | str = CostMode.NSS, *,
                             term_budget: int = DEFAULT_TERM_BUDGET) -> BudgetOptimum:
    """Smallest exact error over the threshold family at cost <= budget.

    The candidate thresholds are the distinct scores.  A floor threshold is
    lowered until its set is unaffordable (or nothing is excluded), then the
    scores above it are scanned from the top, ties grouped, and the last
    affordable threshold wins.
    """
    mode = CostMode.parse(mode)
    c0 = costfn(0)
    if budget < c0:
        return BudgetOptimum(eps_sq=1.0, error=1.0, cost=0.0, total_terms=0)
    top = model.gamma.value(1) * model.lam.value(1)
    floor = top / 4.0
    while True:
        aset = enumerate_active_set(model, eps_sq=floor, term_budget=term_budget)
        exhausted = aset.largest_excluded_score == 0.0
        if exhausted or algorithm_cost(aset, costfn, mode) > budget:
            break
        floor /= 4.0
    entries = sorted(((s, t) for s, t in zip(aset.scores, aset.terms)),
                     key=lambda st: -st[0])
    key = (lambda t: t.level) if mode is CostMode.NSS else (lambda t: t.size)
    # threshold 'top' (or 1 when no nonempty term exists) keeps only the empty term
    best = BudgetOptimum(eps_sq=top, error=math.sqrt(top), cost=c0, total_terms=1)
    parts = [c0]
    n = 1
    i = 0
    while i < len(entries):
        if entries[i][1].size == 0:
            i += 1
            continue
        s = entries[i][0]
        group = []
        while i < len(entries) and entries[i][0] == s:
            if entries[i][1].size:
                group.append(entries[i][1])
            i += 1
        parts.extend(costfn(key(t)) for t in group)
        n += len(group)
        cost = math.fsum(parts)
        if cost > budget:
            break
        nxt = next((e[0] for e in entries[i:] if e[1].size), None)
        if nxt is None:
            if not exhausted:
                break
            best = BudgetOptimum(eps_sq=0.0, error=0.0, cost=cost, total_terms=n)
            break
        best = BudgetOptimum(eps_sq=nxt, error=math.sqrt(nxt), cost=cost, total_terms=n)
    return best


@dataclass(frozen=True)
class RateBounds:
    lower: float
    upper: float

    @property
    def p_upper(self) -> float:
        """Exponent of tractability implied by the lower rate bound."""
        return math.inf if self.lower == 0 else 1.0 / self.lower

    @property
    def p_lower(self) -> float:
        return math.inf if self.upper == 0 else 1.0 / self.upper

    def as_dict(self) -> dict:
        return {"lower": self.lower, "upper": self.upper,
                "p_upper": self.p_upper, "p_lower": self.p_lower}


def _check_rates(d_lambda_low, d_gamma_low, d_gamma_up, s):
    if not d_lambda_low > 1:
        raise InvalidArgument("d_lambda_low must exceed 1")
    if not d_gamma_low > 1:
        raise InvalidArgument("d_gamma_low must exceed 1")
    if not d_gamma_up >= d_gamma_low:
        raise InvalidArgument("d_gamma_up must be >= d_gamma_low")
    if not (s > 0 and math.isfinite(s)):
        raise InvalidArgument("s must be positive and finite")


def anova_rate_bounds(d_lambda_low: float, d_gamma_low: float, d_gamma_up: float,
                      s: float) -> RateBounds:
    """min{dl/2, dg_low/(2(1+s))} <= r <= min{dl/2, dg_up/(2(1+s))}."""
    _check_rates(d_lambda_low, d_gamma_low, d_gamma_up, s)
    cap = d_lambda_low / 2.0
    return RateBounds(lower=min(cap, d_gamma_low / (2.0 * (1.0 + s))),
                      upper=min(cap, d_gamma_up / (2.0 * (1.0 + s))))


@dataclass(frozen=True)
class RateFit:
    rate: float
    intercept: float
    max_residual: float
    n_points: int


def lower_envelope(points: Iterable[tuple[float, float]]) -> list[tuple[float, float]]:
    """Corners of the (cost, error) staircase: error strictly drops as cost rises."""
    env: list = []
    for cost, err in sorted(points):
        if not err > 0:
            continue
        if env and cost == env[-1][0]:
            continue            # sorted: the first at this cost has the least error
        if not env or err < env[-1][1]:
            env.append((cost, err))
    return env


def fit_rate(costs: Sequence[float], errors: Sequence[float]) -> RateFit:
    """Negated least-squares slope of log error against log cost."""
    x = np.log(np.asarray(costs, dtype=float))
    y = np.log(np.asarray(errors, dtype=float))
    if len(x) < 4 or len(np.unique(x)) < 4:
        raise InvalidArgument("rate fit needs at least 4 points with distinct costs")
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (slope * x + icpt)
    return RateFit(rate=float(-slope), intercept=float(icpt),
                   max_residual=float(np.max(np.abs(resid))), n_points=len(x))


def estimate_rate(curve: Sequence[TradeoffPoint], mode: CostMode | str = CostMode.NSS) -> RateFit:
    """Fitted convergence rate on the lower envelope of a trade-off curve."""
    env = lower_envelope((p.cost(mode), p.exact_error) for p in curve)
    if len(env) < 4:
        raise InvalidArgument(
            f"need at least 4 staircase corners with distinct costs, got {len(env)}")
    return fit_rate([c for c, _ in env], [e for _, e in env])
