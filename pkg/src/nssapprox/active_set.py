"""Exact enumeration of the optimal information set.

The active set for a threshold eps is every index pair (u, j) whose score
gamma_u * lambda_{u,j} is strictly above eps**2, plus (by default) the empty
term with score 1.  Scores only shrink when an eigen-index grows or a larger
coordinate is appended, so a depth-first walk that appends coordinates in
increasing order and stops at the first rejected child in each direction
visits the set exactly; the rejected children form a frontier whose maximum
is the largest excluded score.
"""
from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable

from .errors import BudgetExceeded, InvalidArgument, TruncationUnsound
from .weights import ProblemModel, Term

DEFAULT_TERM_BUDGET = 10_000_000


def _threshold(eps: float | None, eps_sq: float | None) -> tuple[float, float]:
    """Return (eps, eps**2) from whichever one the caller supplied."""
    if (eps is None) == (eps_sq is None):
        raise InvalidArgument("give exactly one of eps and eps_sq")
    if eps_sq is None:
        if not eps > 0:
            raise InvalidArgument("eps must be positive")
        return float(eps), float(eps) * float(eps)
    if not eps_sq > 0:
        raise InvalidArgument("eps_sq must be positive")
    return math.sqrt(eps_sq), float(eps_sq)


class _Values:
    """Lazily grown, 1-indexed cache of sequence values (scalar evaluation)."""

    __slots__ = ("seq", "vals", "support")

    def __init__(self, seq):
        self.seq = seq
        self.vals = [0.0]
        self.support = seq.support

    def __getitem__(self, n: int) -> float:
        vals = self.vals
        while n >= len(vals):
            k = len(vals)
            vals.append(0.0 if self.support is not None and k > self.support
                        else self.seq.value(k))
        return vals[n]


@dataclass(frozen=True)
class ActiveSetSummary:
    """Counts-only view of an active set."""

    epsilon: float
    eps_sq: float
    level_counts: dict          # k >= 1 -> n_k
    size_counts: dict           # |u| -> number of terms (empty term included at 0)
    m_eps: int
    largest_excluded_score: float
    includes_empty_term: bool

    @property
    def total_terms(self) -> int:
        return sum(self.level_counts.values()) + int(self.includes_empty_term)

    def summary(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "eps_sq": self.eps_sq,
            "m_eps": self.m_eps,
            "level_counts": {str(k): v for k, v in sorted(self.level_counts.items())},
            "total_terms": self.total_terms,
            "largest_excluded_score": self.largest_excluded_score,
            "includes_empty_term": self.includes_empty_term,
        }


@dataclass(frozen=True)
class ActiveSet(ActiveSetSummary):
    """Active set with its terms in canonical order (level, u, j)."""

    terms: tuple = field(default=())
    scores: tuple = field(default=())

    def __iter__(self):
        return iter(self.terms)

    def __len__(self):
        return len(self.terms)

    def __contains__(self, t: Term) -> bool:
        return t in self._index

    @property
    def _index(self) -> frozenset:
        idx = self.__dict__.get("_idx")
        if idx is None:
            idx = frozenset(self.terms)
            object.__setattr__(self, "_idx", idx)
        return idx

    def level(self, k: int) -> list[Term]:
        return [t for t in self.terms if t.level == k]


def _walk(model: ProblemModel, t: float, include_empty: bool, budget: int,
          collect: bool):
    """Depth-first enumeration of {(u, j) : score > t}.

    Returns (records, counts, frontier) where ``records`` is a list of
    (u, j, score) when ``collect`` is set, ``counts`` maps (level, size) to a
    count, and ``frontier`` is the largest rejected score seen.
    """
    g = _Values(model.gamma)
    lam = _Values(model.lam)
    lam1 = lam[1]
    records: list = []
    counts: dict = defaultdict(int)
    frontier = 0.0
    total = 0

    def bump(level, size, n=1):
        nonlocal total
        counts[(level, size)] += n
        total += n
        if total > budget:
            raise BudgetExceeded(
                f"active set exceeds the term budget of {budget}",
                terms_so_far=total, deepest_level=max(k for k, _ in counts))

    def visit(gu, lu, u, j, m):
        # children of an included node: append a coordinate k > m
        nonlocal frontier
        k = m + 1
        size = len(u) + 1 if collect else u + 1
        while True:
            gk = g[k]
            gc = gu * gk
            s = gc * (lu * lam1)
            if not s > t:
                if s > frontier:
                    frontier = s
                return
            gnext = g[k + 1]
            leaf_from = None
            i = 1
            while True:
                lc = lu * lam[i]
                s = gc * lc
                if not s > t:
                    if s > frontier:
                        frontier = s
                    break
                if leaf_from is None:
                    # extension (k+1, 1) of this child, scored as visit() would
                    s_ext = (gc * gnext) * (lc * lam1)
                    if s_ext > t:
                        if collect:
                            uc, jc = u + (k,), j + (i,)
                            records.append((uc, jc, s))
                            bump(k, size)
                            visit(gc, lc, uc, jc, k)
                        else:
                            bump(k, size)
                            visit(gc, lc, size, None, k)
                        i += 1
                        continue
                    leaf_from = i
                    if s_ext > frontier:
                        frontier = s_ext
                # leaves: no descendant can be included
                if collect:
                    records.append((u + (k,), j + (i,), s))
                bump(k, size)
                i += 1
            k += 1

    if not 1.0 > t:
        return records, counts, 1.0
    if include_empty:
        if collect:
            records.append(((), (), 1.0))
    else:
        frontier = 1.0
    if collect:
        visit(1.0, 1.0, (), (), 0)
    else:
        visit(1.0, 1.0, 0, None, 0)
    return records, counts, frontier


def _summarise(eps, t, counts, frontier, include_empty, nonempty_possible=True):
    level_counts: dict = defaultdict(int)
    size_counts: dict = defaultdict(int)
    for (level, size), n in counts.items():
        level_counts[level] += n
        size_counts[size] += n
    has_empty = include_empty and 1.0 > t
    if has_empty:
        size_counts[0] += 1
    return (dict(sorted(level_counts.items())), dict(sorted(size_counts.items())),
            max(level_counts, default=0), has_empty)


def enumerate_active_set(model: ProblemModel, eps: float | None = None, *,
                         eps_sq: float | None = None, include_empty: bool = True,
                         term_budget: int = DEFAULT_TERM_BUDGET) -> ActiveSet:
    """All terms with score > eps**2, in canonical order.

    ``eps >= 1`` gives the empty set with largest excluded score 1.  Pass
    ``eps_sq`` instead of ``eps`` to give the squared threshold exactly.
    """
    eps, t = _threshold(eps, eps_sq)
    records, counts, frontier = _walk(model, t, include_empty, term_budget, collect=True)
    records.sort(key=lambda r: (r[0][-1] if r[0] else 0, r[0], r[1]))
    level_counts, size_counts, m_eps, has_empty = _summarise(eps, t, counts, frontier,
                                                             include_empty)
    return ActiveSet(
        epsilon=eps, eps_sq=t, level_counts=level_counts, size_counts=size_counts,
        m_eps=m_eps, largest_excluded_score=frontier, includes_empty_term=has_empty,
        terms=tuple(Term._raw(u, j) for u, j, _ in records),
        scores=tuple(s for _, _, s in records))


def count_active_set(model: ProblemModel, eps: float | None = None, *,
                     eps_sq: float | None = None, include_empty: bool = True,
                     term_budget: int = DEFAULT_TERM_BUDGET) -> ActiveSetSummary:
    """Same walk as :func:`enumerate_active_set` without materialising terms."""
    eps, t = _threshold(eps, eps_sq)
    _, counts, frontier = _walk(model, t, include_empty, term_budget, collect=False)
    level_counts, size_counts, m_eps, has_empty = _summarise(eps, t, counts, frontier,
                                                             include_empty)
    return ActiveSetSummary(
        epsilon=eps, eps_sq=t, level_counts=level_counts, size_counts=size_counts,
        m_eps=m_eps, largest_excluded_score=frontier, includes_empty_term=has_empty)


def single_coordinate_count(model: ProblemModel, eps: float | None = None, k: int = 1, *,
                            eps_sq: float | None = None) -> int:
    """n-bar_k = |{j : gamma_k * lambda_j > eps**2}|."""
    _, t = _threshold(eps, eps_sq)
    gk = model.gamma.value(k)
    lam = model.lam

    def inside(j):
        if lam.support is not None and j > lam.support:
            return False
        return gk * lam.value(j) > t

    if not inside(1):
        return 0
    hi = 2
    while inside(hi):
        hi *= 2
    lo = hi // 2          # inside(lo) holds, inside(hi) fails
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if inside(mid):
            lo = mid
        else:
            hi = mid
    return lo


def max_level(model: ProblemModel, eps: float | None = None, *,
              eps_sq: float | None = None) -> int:
    """m_eps: the largest k with gamma_k * lambda_1 > eps**2 (0 if none)."""
    _, t = _threshold(eps, eps_sq)
    lam1 = model.lam.value(1)
    g = model.gamma

    def inside(k):
        if g.support is not None and k > g.support:
            return False
        return g.value(k) * lam1 > t

    if not inside(1):
        return 0
    hi = 2
    while inside(hi):
        hi *= 2
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if inside(mid):
            lo = mid
        else:
            hi = mid
    return lo


def _slice_recursive(g: _Values, lam: _Values, t: float, k: int) -> list:
    """M(t, k) built from single-coordinate sets and lower-level slices.

    M(t, k) = Mbar(t, k) united with ({k}, i) x M(t / (gamma_k lambda_i), l)
    over l < k and i >= 1.  The i-loop stops once gamma_k lambda_i <= t, where
    every rescaled threshold is >= 1 and the inner slices are empty; the
    l-loop skips slices whose threshold is at least gamma_l * lambda_1.
    """
    out = []
    gk = g[k]
    i = 1
    while True:
        s = gk * lam[i]
        if not s > t:
            return out
        out.append(((k,), (i,)))
        inner = t / s
        for ell in range(1, k):
            if not inner < g[ell] * lam[1]:
                continue
            for u2, j2 in _slice_recursive(g, lam, inner, ell):
                out.append((u2 + (k,), j2 + (i,)))
        i += 1


def level_slice(model: ProblemModel, eps: float | None = None, k: int = 1, *,
                eps_sq: float | None = None, method: str = "filter") -> list[Term]:
    """M(eps, k): active terms with max u = k, in canonical order.

    ``method="filter"`` filters the full enumeration; ``method="recursion"``
    builds the slice level by level from rescaled thresholds.
    """
    eps, t = _threshold(eps, eps_sq)
    if k < 1:
        raise InvalidArgument("k must be at least 1")
    if method == "filter":
        return enumerate_active_set(model, eps_sq=t).level(k)
    if method == "recursion":
        pairs = _slice_recursive(_Values(model.gamma), _Values(model.lam), t, k)
        return sorted(Term._raw(u, j) for u, j in pairs)
    raise InvalidArgument(f"unknown method {method!r}")


def brute_force_active_set(model: ProblemModel, eps: float | None = None,
                           max_coord: int = 8, max_index: int = 8, *,
                           eps_sq: float | None = None, budget: int = 10_000_000) -> list[Term]:
    """Exhaustive scan over u in [max_coord], j in [max_index]^|u|.

    Candidates are filtered (never pruned recursively) by the bound
    gamma_u * lambda_1**|u|; surviving index tuples are scored term by term.
    Raises TruncationUnsound when coordinate max_coord + 1 or eigen-index
    max_index + 1 could still carry an active term.
    """
    eps, t = _threshold(eps, eps_sq)
    if not 1.0 > t:
        return []
    g = [0.0] + [model.gamma.value(k) for k in range(1, max_coord + 2)]
    lam = [0.0] + [model.lam.value(i) for i in range(1, max_index + 2)]
    if g[max_coord + 1] * lam[1] > t:
        raise TruncationUnsound(f"coordinate {max_coord + 1} still has active terms")
    if g[1] * lam[max_index + 1] > t:
        raise TruncationUnsound(f"eigen-index {max_index + 1} still has active terms")
    slack = 1.0 + 1e-9
    found = [Term.empty()]
    evaluated = 0
    for r in range(1, max_coord + 1):
        best = math.prod(g[1:r + 1]) * lam[1] ** r
        if best * slack <= t:
            break
        for u in itertools.combinations(range(1, max_coord + 1), r):
            gu = 1.0
            for c in u:
                gu *= g[c]
            rest = gu * lam[1] ** (r - 1)
            if rest * lam[1] * slack <= t:
                continue
            cap = 1
            while cap < max_index and rest * lam[cap + 1] * slack > t:
                cap += 1
            evaluated += cap ** r
            if evaluated > budget:
                raise BudgetExceeded("brute-force scan exceeds its budget",
                                     terms_so_far=len(found))
            for j in itertools.product(range(1, cap + 1), repeat=r):
                lu = 1.0
                for i in j:
                    lu *= lam[i]
                if gu * lu > t:
                    found.append(Term._raw(u, j))
    found.sort()
    return found


def level_envelope_ratio(model: ProblemModel, eps: float, p: float) -> float:
    """m_eps * eps**(2/p)."""
    return max_level(model, eps) * eps ** (2.0 / p)


def count_envelope_ratios(model: ProblemModel, eps: float, q: float) -> list[float]:
    """n-bar_k / (gamma_k**(1/q) * eps**(-2/q)) for k = 1..m_eps."""
    out = []
    for k in range(1, max_level(model, eps) + 1):
        nk = single_coordinate_count(model, eps, k)
        out.append(nk / (model.gamma.value(k) ** (1.0 / q) * eps ** (-2.0 / q)))
    return out


def disjoint_union_count(model: ProblemModel, eps_sq: float, k: int) -> int:
    """|M(eps, k)| from the disjoint-union identity, counting only.

    |M(t, k)| = nbar_k(t) + sum_{l<k} sum_i |M(t / (gamma_k lambda_i), l)|.
    """
    g = _Values(model.gamma)
    lam = _Values(model.lam)

    def count(t, k):
        total = 0
        gk = g[k]
        i = 1
        while gk * lam[i] > t:
            total += 1
            inner = t / (gk * lam[i])
            for ell in range(1, k):
                if inner < g[ell] * lam[1]:
                    total += count(inner, ell)
            i += 1
        return total

    return count(float(eps_sq), k)


def iter_csv_rows(aset: ActiveSet) -> Iterable[tuple]:
    for term, score in zip(aset.terms, aset.scores):
        u, j = term.labels()
        yield term.level, u, j, score
