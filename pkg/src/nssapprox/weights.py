"""Product weights, tensorised eigenvalues and term scores.

A :class:`ProblemModel` pairs the coordinate weights gamma_1 >= gamma_2 >= ...
with the univariate eigenvalues lambda_1 >= lambda_2 >= ....  The eigenvalue of
the infinite-variate operator attached to an index pair (u, j) is the *score*
gamma_u * prod_i lambda_{j_i}; everything downstream is phrased in scores.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Iterable, Mapping

import numpy as np

from .errors import DivergentConstant, InvalidArgument, InvalidSequence
from .sequences import DecreasingSequence, sequence_from_descriptor

# products over more factors than this are formed in log-space
LOG_SPACE_THRESHOLD = 16
MONOTONE_CHECK_HORIZON = 4096


@dataclass(frozen=True, slots=True, order=False)
class Term:
    """Index pair (u, j): coordinates u (strictly increasing) and eigen-indices j."""

    u: tuple
    j: tuple

    def __post_init__(self):
        u, j = tuple(int(x) for x in self.u), tuple(int(x) for x in self.j)
        if len(u) != len(j):
            raise InvalidArgument(f"|u| != |j| in term {u}, {j}")
        if any(x < 1 for x in u + j):
            raise InvalidArgument("term entries must be positive")
        if any(b <= a for a, b in zip(u, u[1:])):
            raise InvalidArgument(f"coordinates must be strictly increasing: {u}")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "j", j)

    @classmethod
    def _raw(cls, u: tuple, j: tuple) -> "Term":
        # trusted constructor for enumerators; skips validation
        t = object.__new__(cls)
        object.__setattr__(t, "u", u)
        object.__setattr__(t, "j", j)
        return t

    @classmethod
    def empty(cls) -> "Term":
        return cls._raw((), ())

    @classmethod
    def parse(cls, u: str, j: str) -> "Term":
        def ints(s):
            return () if s.strip() in ("-", "") else tuple(int(x) for x in s.split("-"))
        return cls(ints(u), ints(j))

    @property
    def level(self) -> int:
        """max u, with max of the empty set = 0."""
        return self.u[-1] if self.u else 0

    @property
    def size(self) -> int:
        return len(self.u)

    def sort_key(self):
        return (self.level, self.u, self.j)

    def __lt__(self, other: "Term") -> bool:
        return self.sort_key() < other.sort_key()

    def labels(self) -> tuple[str, str]:
        if not self.u:
            return "-", "-"
        return "-".join(map(str, self.u)), "-".join(map(str, self.j))

    def __mul__(self, other: "Term") -> "Term":
        """Disjoint product (u1, j1) x (u2, j2)."""
        if set(self.u) & set(other.u):
            raise InvalidArgument("terms must have disjoint coordinate sets")
        pairs = sorted(zip(self.u + other.u, self.j + other.j))
        return Term(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))


@dataclass(frozen=True)
class ProblemModel:
    """Weights gamma and univariate eigenvalues lambda.

    ``lambda_is_block_spectrum`` records that lambda is the spectrum of the
    per-coordinate block (constants excluded); the empty term is always
    scored separately with score 1.
    """

    gamma: DecreasingSequence
    lam: DecreasingSequence
    lambda_is_block_spectrum: bool = True

    def __post_init__(self):
        g1, l1 = self.gamma.value(1), self.lam.value(1)
        if g1 > 1.0:
            raise InvalidArgument(f"gamma_1 = {g1} exceeds 1")
        if g1 * l1 > 1.0:
            raise InvalidArgument(f"gamma_1 * lambda_1 = {g1 * l1} exceeds 1")
        for seq, label in ((self.gamma, "gamma"), (self.lam, "lambda")):
            if not seq.check_monotone(MONOTONE_CHECK_HORIZON):
                raise InvalidSequence(f"{label} is not positive and non-increasing")
        d = self.lam.decay_low
        if d is not None and d <= 1.0:
            raise InvalidArgument(f"lower decay rate of lambda must exceed 1, got {d}")

    @classmethod
    def from_descriptor(cls, desc: Mapping[str, Any]) -> "ProblemModel":
        try:
            return cls(sequence_from_descriptor(desc["gamma"]),
                       sequence_from_descriptor(desc["lambda"]),
                       bool(desc.get("lambda_is_block_spectrum", True)))
        except KeyError as exc:
            raise InvalidArgument(f"model descriptor missing {exc}") from None

    def descriptor(self) -> dict:
        return {"gamma": self.gamma.descriptor(), "lambda": self.lam.descriptor(),
                "lambda_is_block_spectrum": self.lambda_is_block_spectrum}

    def with_gamma(self, gamma: DecreasingSequence) -> "ProblemModel":
        return ProblemModel(gamma, self.lam, self.lambda_is_block_spectrum)


def product_weight(model: ProblemModel, u: Iterable[int]) -> float:
    """gamma_u = prod_{i in u} gamma_i (1 for the empty set)."""
    u = tuple(u)
    if len(u) > LOG_SPACE_THRESHOLD:
        return math.exp(math.fsum(model.gamma.log_value(i) for i in u))
    w = 1.0
    for i in u:
        w *= model.gamma.value(i)
    return w


def eigen_product(model: ProblemModel, j: Iterable[int]) -> float:
    j = tuple(j)
    if len(j) > LOG_SPACE_THRESHOLD:
        return math.exp(math.fsum(model.lam.log_value(i) for i in j))
    w = 1.0
    for i in j:
        w *= model.lam.value(i)
    return w


def term_score(model: ProblemModel, t: Term) -> float:
    """gamma_u * lambda_{u,j}.

    Both factors are left folds over the coordinates in increasing order, the
    same order the enumerators use, so scores are bit-identical everywhere.
    """
    if t.size > LOG_SPACE_THRESHOLD:
        return math.exp(math.fsum([model.gamma.log_value(i) for i in t.u]
                                  + [model.lam.log_value(i) for i in t.j]))
    return product_weight(model, t.u) * eigen_product(model, t.j)


def weighted_subset_sum(model: ProblemModel, tau: float, C: float, k: int) -> float:
    """sum over k in u subset [k] of gamma_u**(1/tau) * C**|u|, in closed form.

    For product weights the sum factorises as
    C * gamma_k**(1/tau) * prod_{i<k} (1 + C * gamma_i**(1/tau)).
    """
    if not tau > 0:
        raise InvalidArgument("tau must be positive")
    if k < 1:
        raise InvalidArgument("k must be at least 1")
    out = C * model.gamma.value(k) ** (1.0 / tau)
    for i in range(1, k):
        out *= 1.0 + C * model.gamma.value(i) ** (1.0 / tau)
    return out


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def __contains__(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def as_list(self) -> list[float]:
        return [self.lo, self.hi]


def _explicit_terms(seq: DecreasingSequence, start: int, stop: int, q: float) -> np.ndarray:
    """x_j**q for start <= j <= stop."""
    ns = np.arange(start, stop + 1, dtype=np.int64)
    return seq.values(ns) ** q


def tail_weight_sum(model: ProblemModel, L: int, power: float, *,
                    rel_tol: float = 1e-10, max_terms: int = 1 << 22) -> Interval:
    """Bracket sum_{j > L} gamma_j**power.

    Terms are summed explicitly from L+1 up to a cut N (doubling until the
    bracket is tight enough) and the rest is bounded by the sequence's
    analytic tail bracket.
    """
    if L < 0:
        raise InvalidArgument("L must be non-negative")
    if not power > 0:
        raise InvalidArgument("power must be positive")
    seq = model.gamma
    if seq.support is not None:
        if L >= seq.support:
            return Interval(0.0, 0.0)
        exact = math.fsum(_explicit_terms(seq, L + 1, seq.support, power))
        return Interval(exact, exact)
    parts: list[float] = []
    n = L
    width = 64
    while True:
        parts.append(math.fsum(_explicit_terms(seq, n + 1, n + width, power)))
        n += width
        t_lo, t_hi = seq.tail_power_sum(n, power)
        head = math.fsum(parts)
        lo, hi = head + t_lo, head + t_hi
        if hi - lo <= rel_tol * hi or n - L >= max_terms:
            return Interval(lo, hi)
        width = n - L


@dataclass(frozen=True)
class CGamma:
    """Certified bracket for C_gamma = prod_j (1 + gamma_j**c)."""

    lo: float
    hi: float
    n_terms: int

    @property
    def value(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def as_list(self) -> list[float]:
        return [self.lo, self.hi]


def c_gamma_steps(model: ProblemModel, c: float, *, start: int = 64,
                  max_terms: int = 1 << 24):
    """Yield successively tighter, nested C_gamma brackets (cut doubles each step).

    With x_j = gamma_j**c and P_N = prod_{j<=N} (1 + x_j):
    P_N * exp(T_lo - S_hi / 2) <= C_gamma <= P_N * exp(T_hi), where T brackets
    sum_{j>N} x_j and S_hi bounds sum_{j>N} x_j**2 (log(1+x) >= x - x**2/2).
    """
    seq = model.gamma
    if seq.support is not None:
        exact = 1.0
        for j in range(1, seq.support + 1):
            exact *= 1.0 + seq.value(j) ** c
        yield CGamma(exact, exact, seq.support)
        return
    logs: list[float] = []
    n = 0
    width = start
    while n < max_terms:
        logs.append(math.fsum(np.log1p(_explicit_terms(seq, n + 1, n + width, c))))
        n += width
        log_p = math.fsum(logs)
        t_lo, t_hi = seq.tail_power_sum(n, c)
        _, s_hi = seq.tail_power_sum(n, 2.0 * c)
        yield CGamma(math.exp(log_p + t_lo - 0.5 * s_hi), math.exp(log_p + t_hi), n)
        width = n


def c_gamma_constant(model: ProblemModel, c: float, rel_tol: float = 1e-6) -> CGamma:
    """C_gamma = sum_{v} gamma_v**c = prod_j (1 + gamma_j**c) with hi/lo <= 1 + rel_tol.

    Raises DivergentConstant when sum_j gamma_j**c cannot be certified finite
    or the bracket stops shrinking before the term cap.
    """
    if not c > 0:
        raise InvalidArgument("c must be positive")
    last = None
    for bracket in c_gamma_steps(model, c):
        last = bracket
        if bracket.hi <= bracket.lo * (1.0 + rel_tol):
            return bracket
    raise DivergentConstant(
        f"C_gamma bracket did not reach rel_tol {rel_tol} (last {last})")
