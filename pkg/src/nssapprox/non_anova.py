"""Transfer of the optimal algorithm to non-ANOVA spaces, and lower bounds.

For 0 < c < 1 with sum_j gamma_j**c finite, the map f -> sum_u gamma_u**(-c/2) f_u
is an isometry onto the space with weights gamma_u**(1-c).  Running the
optimal ANOVA algorithm for those auxiliary weights gives an error bounded by
sqrt(C_gamma) * eps with C_gamma = prod_j (1 + gamma_j**c).

The lower bound goes the other way: a tail-supported witness built from some
h with nonzero mean c1 cannot be seen by any algorithm of cost N, whose
functionals only touch coordinates 1..L with L = sup{k : $(k) <= N}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .active_set import DEFAULT_TERM_BUDGET, _threshold, count_active_set, enumerate_active_set
from .anova import CoefficientFunction, RateBounds, _check_rates, anova_rate_bounds
from .cost import CostFunction, CostMode, algorithm_cost
from .errors import DivergentConstant, InvalidArgument
from .weights import CGamma, Interval, ProblemModel, product_weight, tail_weight_sum, \
    c_gamma_constant


@dataclass(frozen=True)
class AuxiliaryModel:
    base: ProblemModel
    c: float
    model_hat: ProblemModel     # weights gamma_j**(1-c), same lambda
    c_gamma: CGamma

    @property
    def gamma_hat(self):
        return self.model_hat.gamma


def admissible_c_range(model: ProblemModel) -> tuple[float, float]:
    d = model.gamma.decay_low
    if d is None:
        raise InvalidArgument("lower decay rate of gamma is unknown; claim it or pass c")
    if d <= 1.0:
        raise DivergentConstant(f"sum gamma_j^c diverges for every c < 1 (d_low = {d})")
    return 1.0 / d, 1.0


def build_auxiliary(model: ProblemModel, c: float | None = None, *,
                    rel_tol: float = 1e-6) -> AuxiliaryModel:
    """Auxiliary weights gamma**(1-c) and a certified C_gamma.

    ``c`` defaults to the midpoint of (1/d_low, 1).
    """
    lo, hi = admissible_c_range(model)
    if c is None:
        c = 0.5 * (lo + hi)
    c = float(c)
    if not lo < c < hi:
        raise InvalidArgument(f"c = {c} outside ({lo:g}, {hi:g})")
    cg = c_gamma_constant(model, c, rel_tol=rel_tol)
    hat = model.with_gamma(model.gamma.powered(1.0 - c))
    return AuxiliaryModel(base=model, c=c, model_hat=hat, c_gamma=cg)


def phi_transform(f: CoefficientFunction, model: ProblemModel, c: float,
                  direction: str = "forward") -> CoefficientFunction:
    """Scale every coefficient on a term with coordinates u by gamma_u**(-c/2).

    The scaling acts on coefficients against a weight-independent basis (the
    unweighted eigenfunctions, see :func:`to_eta`); ``direction="inverse"``
    multiplies by gamma_u**(c/2) instead.
    """
    if direction not in ("forward", "inverse"):
        raise InvalidArgument(f"unknown direction {direction!r}")
    sign = -1.0 if direction == "forward" else 1.0
    return CoefficientFunction(
        {t: a * product_weight(model, t.u) ** (sign * c / 2.0) for t, a in f.items()})


def to_eta(f: CoefficientFunction, model: ProblemModel) -> CoefficientFunction:
    """xi-coefficients in the weighted space -> unweighted eigenbasis coefficients."""
    return CoefficientFunction({t: a * math.sqrt(product_weight(model, t.u))
                                for t, a in f.items()})


def from_eta(g: CoefficientFunction, model: ProblemModel) -> CoefficientFunction:
    return CoefficientFunction({t: a / math.sqrt(product_weight(model, t.u))
                                for t, a in g.items()})


def weighted_norm_sq(g: CoefficientFunction, model: ProblemModel) -> float:
    """Norm in the weighted space of a function given in the unweighted eigenbasis."""
    return math.fsum(a * a / product_weight(model, t.u) for t, a in g.items())


@dataclass(frozen=True)
class NonAnovaResult:
    aux: AuxiliaryModel
    active_set: object
    nominal_eps: float
    certified_error_bound: float
    cost_nss: float

    def summary(self) -> dict:
        return {
            "c": self.aux.c,
            "C_gamma": self.aux.c_gamma.as_list(),
            "nominal_eps": self.nominal_eps,
            "certified_bound": self.certified_error_bound,
            "cost_nss": self.cost_nss,
            "total_terms": self.active_set.total_terms,
            "m_eps": self.active_set.m_eps,
        }


def certified_non_anova_approximation(model: ProblemModel, eps: float | None,
                                      costfn: CostFunction, c: float | None = None, *,
                                      eps_sq: float | None = None, rel_tol: float = 1e-6,
                                      collect: bool = True,
                                      term_budget: int = DEFAULT_TERM_BUDGET) -> NonAnovaResult:
    """Optimal ANOVA algorithm for the auxiliary weights, with the error bound it certifies.

    The bound sqrt(C_gamma) * min(eps, 1) uses the upper end of the C_gamma
    bracket; for eps >= 1 the set is empty and the bound is sqrt(C_gamma).
    """
    eps, t = _threshold(eps, eps_sq)
    aux = build_auxiliary(model, c, rel_tol=rel_tol)
    run = enumerate_active_set if collect else count_active_set
    aset = run(aux.model_hat, eps_sq=t, term_budget=term_budget)
    bound = math.sqrt(aux.c_gamma.hi) * min(eps, 1.0)
    return NonAnovaResult(aux=aux, active_set=aset, nominal_eps=eps,
                          certified_error_bound=bound,
                          cost_nss=algorithm_cost(aset, costfn, CostMode.NSS))


def non_anova_rate_bounds(d_lambda_low: float, d_gamma_low: float, d_gamma_up: float,
                          s: float) -> RateBounds:
    """min{dl/2, (dg_low-1)/(2(1+s))} <= r <= min{dl/2, (dg_up-1)/(2s)}."""
    _check_rates(d_lambda_low, d_gamma_low, d_gamma_up, s)
    if not math.isfinite(d_gamma_up):
        raise InvalidArgument("d_gamma_up must be finite")
    cap = d_lambda_low / 2.0
    return RateBounds(lower=min(cap, (d_gamma_low - 1.0) / (2.0 * (1.0 + s))),
                      upper=min(cap, (d_gamma_up - 1.0) / (2.0 * s)))


def _tails(model: ProblemModel, L: int) -> tuple[Interval, Interval]:
    t1 = tail_weight_sum(model, L, 1.0)
    t2 = tail_weight_sum(model, L, 2.0)
    if not (math.isfinite(t1.hi) and math.isfinite(t2.hi)):
        raise DivergentConstant("tail sum of gamma diverges")
    return t1, t2


def witness_norm(model: ProblemModel, h_norm_sq: float, c1: float, L: int) -> Interval:
    """Bracket of ||f*||^2 = (||h||^2 - c1^2) T2 / T1 + c1^2 T1.

    T_p = sum_{j > L} gamma_j**p.  An empty tail gives [0, 0].
    """
    if c1 == 0:
        raise InvalidArgument("c1 must be nonzero (h must have nonzero mean)")
    if not h_norm_sq >= c1 * c1:
        raise InvalidArgument("need ||h||^2 >= c1^2")
    if L < 0:
        raise InvalidArgument("L must be non-negative")
    t1, t2 = _tails(model, int(L))
    if t1.hi == 0.0:
        return Interval(0.0, 0.0)
    a = h_norm_sq - c1 * c1
    b = c1 * c1
    lo = a * t2.lo / t1.hi + b * t1.lo
    hi = (a * t2.hi / t1.lo if t1.lo > 0 else math.inf) + b * t1.hi
    return Interval(lo, hi)


@dataclass(frozen=True)
class WitnessBound:
    budget: float
    L: int
    norm_sq: Interval

    @property
    def error_lower_bound(self) -> float:
        return math.sqrt(self.norm_sq.lo)


def budget_to_level(costfn: CostFunction, budget: float) -> int:
    """L = sup{k : $(k) <= N}, with L = 0 when nothing is affordable."""
    return max(0, costfn.largest_affordable(budget))


def witness_lower_bound(model: ProblemModel, costfn: CostFunction, budget: float,
                        h_norm_sq: float, c1: float) -> WitnessBound:
    L = budget_to_level(costfn, budget)
    return WitnessBound(budget=budget, L=L, norm_sq=witness_norm(model, h_norm_sq, c1, L))


def integration_witness(model: ProblemModel, c1: float, L: int) -> Interval:
    """c1 * sqrt(sum_{j > L} gamma_j), the integral of the witness."""
    if c1 == 0:
        raise InvalidArgument("c1 must be nonzero")
    t1, _ = _tails(model, int(L))
    a = abs(c1)
    return Interval(a * math.sqrt(t1.lo), a * math.sqrt(t1.hi))


@dataclass(frozen=True)
class ComparisonGap:
    anova_rate: float
    non_anova_upper: float
    strict: bool

    def as_dict(self) -> dict:
        return {"anova_rate": self.anova_rate, "non_anova_upper": self.non_anova_upper,
                "strict": self.strict}


def comparison_gap(d_gamma: float, d_lambda_low: float, s: float) -> ComparisonGap:
    """ANOVA rate against the non-ANOVA upper bound; strict iff 1 < d_gamma < 1 + s."""
    _check_rates(d_lambda_low, d_gamma, d_gamma, s)
    cap = d_lambda_low / 2.0
    return ComparisonGap(anova_rate=min(cap, d_gamma / (2.0 * (1.0 + s))),
                         non_anova_upper=min(cap, (d_gamma - 1.0) / (2.0 * s)),
                         strict=1.0 < d_gamma < 1.0 + s)


COMPARE_COLUMNS = ("d_gamma", "d_lambda", "s", "anova_lower", "anova_upper",
                   "nonanova_lower", "nonanova_upper", "strict_gap")


def comparison_row(d_gamma: float, d_lambda: float, s: float) -> tuple:
    a = anova_rate_bounds(d_lambda, d_gamma, d_gamma, s)
    n = non_anova_rate_bounds(d_lambda, d_gamma, d_gamma, s)
    gap = comparison_gap(d_gamma, d_lambda, s)
    return (d_gamma, d_lambda, s, a.lower, a.upper, n.lower, n.upper, gap.strict)
