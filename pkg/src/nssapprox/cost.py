"""Cost functions and information-cost accounting.

Under nested subspace sampling a functional whose representer lives in the
coordinates u costs $(max u); under unrestricted sampling it costs $(|u|).
The optimal algorithm evaluates one functional per retained term.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Any, Iterable, Mapping

from .errors import InvalidArgument
from .weights import Term


class CostMode(str, enum.Enum):
    NSS = "nss"
    UNRESTRICTED = "unrestricted"

    @classmethod
    def parse(cls, value) -> "CostMode":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InvalidArgument(f"unknown cost mode {value!r}") from None


@dataclass(frozen=True)
class CostFunction:
    """$(k) = max(1, k)**s, or an explicit non-decreasing table.

    A table covers k = 0..len-1 and is held constant past its end.
    """

    s: float | None = None
    table: tuple | None = None

    def __post_init__(self):
        if (self.s is None) == (self.table is None):
            raise InvalidArgument("give exactly one of s and table")
        if self.s is not None:
            if not (self.s >= 0 and math.isfinite(self.s)):
                raise InvalidArgument(f"cost exponent must be finite and >= 0, got {self.s}")
            object.__setattr__(self, "s", float(self.s))
            return
        tab = tuple(float(x) for x in self.table)
        if not tab:
            raise InvalidArgument("cost table is empty")
        if any(not (x >= 1.0 and math.isfinite(x)) for x in tab):
            raise InvalidArgument("cost table entries must be finite and >= 1")
        if any(b < a for a, b in zip(tab, tab[1:])):
            raise InvalidArgument("cost table must be non-decreasing")
        object.__setattr__(self, "table", tab)

    @classmethod
    def poly(cls, s: float) -> "CostFunction":
        return cls(s=s)

    @classmethod
    def from_descriptor(cls, desc: Mapping[str, Any]) -> "CostFunction":
        kind = desc.get("kind")
        if kind == "poly":
            return cls(s=float(desc["s"]))
        if kind == "table":
            return cls(table=tuple(desc["values"]))
        raise InvalidArgument(f"unknown cost kind {kind!r}")

    def descriptor(self) -> dict:
        if self.s is not None:
            return {"kind": "poly", "s": self.s}
        return {"kind": "table", "values": list(self.table)}

    def __call__(self, k: int) -> float:
        if k < 0:
            raise InvalidArgument("cost argument must be >= 0")
        if self.s is not None:
            return float(max(1, k)) ** self.s
        return self.table[min(k, len(self.table) - 1)]

    def largest_affordable(self, budget: float, cap: int = 1 << 62) -> int:
        """sup{k : $(k) <= budget}, or -1 when even $(0) exceeds it.

        Returns ``cap`` when the cost never exceeds the budget.
        """
        if self(0) > budget:
            return -1
        if self.s is not None:
            if self.s == 0:
                return cap
            k = int(math.floor(budget ** (1.0 / self.s)))
            while k + 1 <= cap and self(k + 1) <= budget:
                k += 1
            while k > 0 and self(k) > budget:
                k -= 1
            return min(k, cap)
        if self.table[-1] <= budget:
            return cap
        return max(k for k, v in enumerate(self.table) if v <= budget)


def term_cost(costfn: CostFunction, t: Term, mode: CostMode | str = CostMode.NSS) -> float:
    mode = CostMode.parse(mode)
    return costfn(t.level if mode is CostMode.NSS else t.size)


def algorithm_cost(aset, costfn: CostFunction, mode: CostMode | str = CostMode.NSS) -> float:
    """Total cost of the algorithm that evaluates one functional per term.

    ``aset`` is an active-set summary (counts are used, levels ascending) or
    any iterable of terms.
    """
    mode = CostMode.parse(mode)
    counts = getattr(aset, "level_counts" if mode is CostMode.NSS else "size_counts", None)
    if counts is None:
        return math.fsum(term_cost(costfn, t, mode) for t in aset)
    parts = []
    if mode is CostMode.NSS and aset.includes_empty_term:
        parts.append(costfn(0))
    parts.extend(n * costfn(k) for k, n in sorted(counts.items()))
    return math.fsum(parts)


def level_counts_of(terms: Iterable[Term], mode: CostMode | str = CostMode.NSS) -> dict:
    mode = CostMode.parse(mode)
    out: dict = {}
    for t in terms:
        k = t.level if mode is CostMode.NSS else t.size
        out[k] = out.get(k, 0) + 1
    return dict(sorted(out.items()))
