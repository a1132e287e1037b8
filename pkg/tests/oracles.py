"""Independent reference implementations used as test oracles.

Everything here works in exact rational arithmetic and shares no code with
the package, so agreement is evidence rather than tautology.
"""
from __future__ import annotations

import itertools
from fractions import Fraction
from math import prod


def inv_power(p: int, scale: Fraction = Fraction(1)):
    """n -> scale * n**-p as an exact Fraction (integer p)."""
    return lambda n: scale / Fraction(n) ** p


def geometric(ratio: Fraction):
    return lambda n: ratio ** n


def exact_active_set(gamma, lam, eps_sq: Fraction, max_coord: int, max_index: int):
    """All (u, j) with gamma_u * lambda_{u,j} > eps_sq, exhaustively.

    Index tuples are scanned slot by slot; a slot loop stops at the first
    index whose bound (lambda_1 in every later slot) is at or below the
    threshold, which is exact because lambda is non-increasing.  Returns
    (terms in canonical order, largest excluded score met on the box).
    Soundness of the box is the caller's responsibility.
    """
    lam_vals = [None] + [lam(i) for i in range(1, max_index + 1)]
    l1 = lam_vals[1]
    terms = [((), ())]
    excluded = Fraction(0)

    def scan(gu, prefix, lp, size):
        nonlocal excluded
        slots = size - len(prefix)
        out = []
        for i in range(1, max_index + 1):
            bound = gu * lp * lam_vals[i] * l1 ** (slots - 1)
            if bound <= eps_sq:
                excluded = max(excluded, bound)
                break
            if slots == 1:
                out.append(prefix + (i,))
            else:
                out.extend(scan(gu, prefix + (i,), lp * lam_vals[i], size))
        return out

    coords = range(1, max_coord + 1)
    for size in range(1, max_coord + 1):
        any_kept = False
        for u in itertools.combinations(coords, size):
            gu = prod((gamma(i) for i in u), start=Fraction(1))
            for j in scan(gu, (), Fraction(1), size):
                terms.append((u, j))
                any_kept = True
        if not any_kept:
            break
    terms.sort(key=lambda t: (t[0][-1] if t[0] else 0, t[0], t[1]))
    return terms, excluded


def exact_score(gamma, lam, u, j) -> Fraction:
    return prod((gamma(i) for i in u), start=Fraction(1)) * prod((lam(i) for i in j),
                                                                  start=Fraction(1))


def subset_sum_bruteforce(gamma_vals, tau: float, C: float, k: int) -> float:
    """sum over u with k in u subset [k] of prod gamma_i**(1/tau) * C**|u|."""
    total = 0.0
    others = range(1, k)
    for r in range(k):
        for v in itertools.combinations(others, r):
            u = v + (k,)
            total += prod(gamma_vals[i] ** (1.0 / tau) for i in u) * C ** len(u)
    return total


def min_cost_subset(scores, costs, eps_sq):
    """Cheapest subset S of a finite universe whose worst-case error is <= eps.

    The worst-case error of keeping S is the largest score outside S; all
    2^n subsets are scanned.
    """
    n = len(scores)
    best = None
    for mask in range(1 << n):
        excluded = max((scores[i] for i in range(n) if not mask >> i & 1), default=0)
        if excluded > eps_sq:
            continue
        c = sum(costs[i] for i in range(n) if mask >> i & 1)
        if best is None or c < best:
            best = c
    return best
