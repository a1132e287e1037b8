"""Positive non-increasing null sequences and their polynomial decay rates.

A sequence is an immutable descriptor (``kind`` plus parameters) that can be
evaluated pointwise, vectorised, and in log-space.  Log-space evaluation is
what the decay estimators use, so sequences whose values underflow double
precision (the block sequence below) can still be analysed.

Every kind that the weighted model may need for certified tail sums also
implements :meth:`DecreasingSequence.tail_power_sum`, a bracket for
``sum_{j > N} x_j**q`` obtained from closed forms or monotone integral
comparison.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .errors import DivergentConstant, InvalidArgument, InvalidSequence, OutOfRange

INF = math.inf


def _as_rate(value: Any) -> float | None:
    if value is None:
        return None
    if isinstance(value, str):
        if value.strip().lower() in ("inf", "+inf", "infinity"):
            return INF
        raise InvalidArgument(f"cannot parse decay rate {value!r}")
    return float(value)


def _rate_to_json(value: float | None):
    if value is None:
        return None
    return "inf" if math.isinf(value) else value


def _power_tail(scale: float, exponent: float, n: int, q: float) -> tuple[float, float]:
    """Bracket sum_{j>n} (scale * j**-exponent)**q by integral comparison."""
    r = exponent * q
    if r <= 1.0:
        raise DivergentConstant(
            f"sum of j^(-{r:g}) diverges; tail cannot be certified")
    cq = scale ** q
    lo = cq * float(n + 1) ** (1.0 - r) / (r - 1.0)
    if n >= 1:
        hi = cq * float(n) ** (1.0 - r) / (r - 1.0)
    else:
        hi = cq + cq / (r - 1.0)
    return lo, hi


class DecreasingSequence:
    """Base class for sequence kinds.

    Subclasses are frozen dataclasses; they are hashable, picklable and safe
    to share between threads and processes.
    """

    kind = ""

    # -- per-kind interface -------------------------------------------------
    def value(self, n: int) -> float:
        raise NotImplementedError

    def log_value(self, n: int) -> float:
        raise NotImplementedError

    def values(self, ns: np.ndarray) -> np.ndarray:
        return np.array([self.value(int(n)) for n in np.asarray(ns).ravel()])

    def log_values(self, ns: np.ndarray) -> np.ndarray:
        return np.array([self.log_value(int(n)) for n in np.asarray(ns).ravel()])

    @property
    def support(self) -> int | None:
        """Number of nonzero terms, or ``None`` for an infinite sequence."""
        return None

    def _default_decay(self) -> tuple[float | None, float | None]:
        return None, None

    def tail_power_sum(self, n: int, q: float) -> tuple[float, float]:
        raise DivergentConstant(f"{self.kind} sequences expose no certified tail bound")

    def _params(self) -> dict:
        raise NotImplementedError

    # -- shared behaviour ---------------------------------------------------
    @property
    def decay_low(self) -> float | None:
        claimed = getattr(self, "claimed_decay_low", None)
        return claimed if claimed is not None else self._default_decay()[0]

    @property
    def decay_up(self) -> float | None:
        claimed = getattr(self, "claimed_decay_up", None)
        return claimed if claimed is not None else self._default_decay()[1]

    def __call__(self, n: int) -> float:
        return self.value(n)

    def powered(self, exponent: float) -> "PoweredSequence":
        return PoweredSequence(self, float(exponent))

    def descriptor(self) -> dict:
        desc: dict[str, Any] = {"kind": self.kind, "params": self._params()}
        if getattr(self, "name", ""):
            desc["name"] = self.name
        for key in ("claimed_decay_low", "claimed_decay_up"):
            if getattr(self, key, None) is not None:
                desc[key] = _rate_to_json(getattr(self, key))
        return desc

    def check_monotone(self, horizon: int) -> bool:
        """True if the sequence is positive on its support and non-increasing on [1, horizon]."""
        top = horizon if self.support is None else min(horizon, self.support)
        for start in range(1, top + 1, 1 << 20):
            stop = min(top, start + (1 << 20))
            logs = self.log_values(np.arange(start, stop + 1, dtype=np.int64))
            if not np.all(np.isfinite(logs)) or np.any(np.diff(logs) > 0):
                return False
        return True


@dataclass(frozen=True)
class PowerSequence(DecreasingSequence):
    """x_n = scale * n**(-exponent)."""

    scale: float = 1.0
    exponent: float = 1.0
    name: str = ""
    claimed_decay_low: float | None = None
    claimed_decay_up: float | None = None

    kind = "power"

    def __post_init__(self):
        if not self.scale > 0 or not self.exponent > 0:
            raise InvalidSequence("power sequence needs scale > 0 and exponent > 0")

    def value(self, n):
        return self.scale * float(n) ** -self.exponent

    def values(self, ns):
        return self.scale * np.asarray(ns, dtype=float) ** -self.exponent

    def log_value(self, n):
        return math.log(self.scale) - self.exponent * math.log(n)

    def log_values(self, ns):
        return math.log(self.scale) - self.exponent * np.log(np.asarray(ns, dtype=float))

    def _default_decay(self):
        return self.exponent, self.exponent

    def tail_power_sum(self, n, q):
        return _power_tail(self.scale, self.exponent, n, q)

    def _params(self):
        return {"scale": self.scale, "exponent": self.exponent}


@dataclass(frozen=True)
class PowerLogSequence(DecreasingSequence):
    """x_n = scale * n**(-exponent) * ln(n+1)**log_power.

    Certified tails need an upper envelope ``envelope_scale * n**-envelope_exponent``;
    it is derived automatically when ``log_power <= 0``.
    """

    scale: float = 1.0
    exponent: float = 1.0
    log_power: float = 1.0
    envelope_scale: float | None = None
    envelope_exponent: float | None = None
    name: str = ""
    claimed_decay_low: float | None = None
    claimed_decay_up: float | None = None

    kind = "power_log"

    def __post_init__(self):
        if not self.scale > 0 or not self.exponent > 0:
            raise InvalidSequence("power_log sequence needs scale > 0 and exponent > 0")
        # d/dn log x_n <= 0 for all n >= 1 iff log_power <= 2 ln 2 * exponent
        if self.log_power > 2.0 * math.log(2.0) * self.exponent:
            raise InvalidSequence("power_log sequence is not non-increasing from n = 1")

    def value(self, n):
        return self.scale * float(n) ** -self.exponent * math.log(n + 1.0) ** self.log_power

    def values(self, ns):
        x = np.asarray(ns, dtype=float)
        return self.scale * x ** -self.exponent * np.log1p(x) ** self.log_power

    def log_value(self, n):
        return (math.log(self.scale) - self.exponent * math.log(n)
                + self.log_power * math.log(math.log(n + 1.0)))

    def log_values(self, ns):
        x = np.asarray(ns, dtype=float)
        return (math.log(self.scale) - self.exponent * np.log(x)
                + self.log_power * np.log(np.log1p(x)))

    def _default_decay(self):
        return self.exponent, self.exponent

    def _envelope(self) -> tuple[float, float]:
        if self.envelope_scale is not None and self.envelope_exponent is not None:
            return self.envelope_scale, self.envelope_exponent
        if self.log_power <= 0:
            return self.scale * math.log(2.0) ** self.log_power, self.exponent
        raise DivergentConstant("power_log with positive log_power needs a declared envelope")

    def tail_power_sum(self, n, q):
        c2, p2 = self._envelope()
        _, hi = _power_tail(c2, p2, n, q)
        return 0.0, hi

    def _params(self):
        params = {"scale": self.scale, "exponent": self.exponent, "log_power": self.log_power}
        if self.envelope_scale is not None:
            params["envelope_scale"] = self.envelope_scale
            params["envelope_exponent"] = self.envelope_exponent
        return params


@dataclass(frozen=True)
class GeometricSequence(DecreasingSequence):
    """x_n = scale * ratio**n, e.g. ratio = 1/4 gives 4^-n."""

    scale: float = 1.0
    ratio: float = 0.5
    name: str = ""
    claimed_decay_low: float | None = None
    claimed_decay_up: float | None = None

    kind = "geometric"

    def __post_init__(self):
        if not self.scale > 0 or not 0 < self.ratio < 1:
            raise InvalidSequence("geometric sequence needs scale > 0 and 0 < ratio < 1")

    def value(self, n):
        return self.scale * self.ratio ** n

    def values(self, ns):
        return self.scale * self.ratio ** np.asarray(ns, dtype=float)

    def log_value(self, n):
        return math.log(self.scale) + n * math.log(self.ratio)

    def log_values(self, ns):
        return math.log(self.scale) + np.asarray(ns, dtype=float) * math.log(self.ratio)

    def _default_decay(self):
        return INF, INF

    def tail_power_sum(self, n, q):
        rq = self.ratio ** q
        tail = self.scale ** q * rq ** (n + 1) / (1.0 - rq)
        return tail, tail

    def _params(self):
        return {"scale": self.scale, "ratio": self.ratio}


@dataclass(frozen=True)
class TableSequence(DecreasingSequence):
    """Finitely supported sequence: explicit values, zero beyond the table."""

    table: tuple = ()
    name: str = ""
    claimed_decay_low: float | None = None
    claimed_decay_up: float | None = None

    kind = "table"

    def __post_init__(self):
        object.__setattr__(self, "table", tuple(float(v) for v in self.table))
        if not self.table:
            raise InvalidSequence("table sequence needs at least one value")
        if any(v <= 0 for v in self.table):
            raise InvalidSequence("table values must be positive")
        if any(b > a for a, b in zip(self.table, self.table[1:])):
            raise InvalidSequence("table values must be non-increasing")

    @property
    def support(self):
        return len(self.table)

    def value(self, n):
        if n < 1:
            raise OutOfRange("sequences are indexed from 1")
        return self.table[n - 1] if n <= len(self.table) else 0.0

    def values(self, ns):
        idx = np.asarray(ns, dtype=np.int64)
        padded = np.concatenate([np.asarray(self.table), [0.0]])
        return padded[np.minimum(idx, len(self.table) + 1) - 1]

    def log_value(self, n):
        v = self.value(n)
        return math.log(v) if v > 0 else -INF

    def log_values(self, ns):
        with np.errstate(divide="ignore"):
            return np.log(self.values(ns))

    def _default_decay(self):
        return INF, INF

    def tail_power_sum(self, n, q):
        tail = math.fsum(v ** q for v in self.table[max(n, 0):])
        return tail, tail

    def _params(self):
        return {"values": list(self.table)}


# block boundaries n_1 = 0, n_{k+1} = 2**n_k + 1; the sixth is not representable
_REMARK_BOUNDARIES = (0, 2, 5, 33, 2 ** 33 + 1)


@dataclass(frozen=True)
class RemarkBlockSequence(DecreasingSequence):
    """Piecewise-constant y_n = 2**-n_k on [n_k, n_{k+1}) with n_1 = 0, n_{k+1} = 2**n_k + 1.

    Lower decay rate 1, upper decay rate infinity.  The first block is clipped
    to start at n = 1.  Values in the fifth block underflow double precision,
    so :meth:`value` raises there while :meth:`log_value` stays exact.
    """

    name: str = ""
    claimed_decay_low: float | None = None
    claimed_decay_up: float | None = None

    kind = "remark_block"

    @staticmethod
    def boundaries() -> tuple[int, ...]:
        return _REMARK_BOUNDARIES

    def block_start(self, n: int) -> int:
        if n < 1:
            raise OutOfRange("sequences are indexed from 1")
        if n.bit_length() > _REMARK_BOUNDARIES[-1]:
            raise OutOfRange("index beyond the last representable block boundary")
        return _REMARK_BOUNDARIES[bisect.bisect_right(_REMARK_BOUNDARIES, n) - 1]

    def value(self, n):
        v = math.ldexp(1.0, -self.block_start(n))
        if v == 0.0:
            raise OutOfRange(f"y_{n} = 2^-{self.block_start(n)} underflows double precision")
        return v

    def log_value(self, n):
        return -self.block_start(n) * math.log(2.0)

    def log_values(self, ns):
        idx = np.asarray(ns, dtype=np.int64)
        starts = np.asarray(_REMARK_BOUNDARIES, dtype=np.int64)
        blk = starts[np.searchsorted(starts, idx, side="right") - 1]
        return -blk.astype(float) * math.log(2.0)

    def values(self, ns):
        out = np.exp2(-np.asarray([self.block_start(int(n)) for n in np.asarray(ns).ravel()],
                                  dtype=float))
        if np.any(out == 0.0):
            raise OutOfRange("block sequence value underflows double precision")
        return out

    def _default_decay(self):
        return 1.0, INF

    def _params(self):
        return {}


@dataclass(frozen=True)
class PoweredSequence(DecreasingSequence):
    """x_n = base_n ** exponent (used for the auxiliary weights gamma_j^(1-c))."""

    base: DecreasingSequence = None
    exponent: float = 1.0
    name: str = ""
    claimed_decay_low: float | None = None
    claimed_decay_up: float | None = None

    kind = "powered"

    def __post_init__(self):
        if self.base is None or not self.exponent > 0:
            raise InvalidSequence("powered sequence needs a base and exponent > 0")

    @property
    def support(self):
        return self.base.support

    def value(self, n):
        return self.base.value(n) ** self.exponent

    def values(self, ns):
        return self.base.values(ns) ** self.exponent

    def log_value(self, n):
        return self.exponent * self.base.log_value(n)

    def log_values(self, ns):
        return self.exponent * self.base.log_values(ns)

    def _default_decay(self):
        lo, up = self.base.decay_low, self.base.decay_up
        return (None if lo is None else lo * self.exponent,
                None if up is None else up * self.exponent)

    def tail_power_sum(self, n, q):
        return self.base.tail_power_sum(n, self.exponent * q)

    def _params(self):
        return {"base": self.base.descriptor(), "exponent": self.exponent}


def power(exponent: float, scale: float = 1.0, name: str = "") -> PowerSequence:
    return PowerSequence(scale=scale, exponent=exponent, name=name)


def remark_block_sequence() -> RemarkBlockSequence:
    """The block sequence with lower decay rate 1 and upper decay rate infinity."""
    return RemarkBlockSequence(name="remark_block")


_KINDS = {
    "power": PowerSequence,
    "power_log": PowerLogSequence,
    "geometric": GeometricSequence,
    "remark_block": RemarkBlockSequence,
}


def sequence_from_descriptor(desc: Mapping[str, Any]) -> DecreasingSequence:
    """Build a sequence from ``{"kind": ..., "params": {...}}``."""
    try:
        kind = desc["kind"]
    except (KeyError, TypeError):
        raise InvalidArgument(f"sequence descriptor needs a 'kind': {desc!r}") from None
    params = dict(desc.get("params", {}))
    extra = {
        "name": desc.get("name", ""),
        "claimed_decay_low": _as_rate(desc.get("claimed_decay_low")),
        "claimed_decay_up": _as_rate(desc.get("claimed_decay_up")),
    }
    try:
        if kind == "table":
            return TableSequence(table=tuple(params["values"]), **extra)
        if kind == "powered":
            return PoweredSequence(base=sequence_from_descriptor(params["base"]),
                                   exponent=float(params["exponent"]), **extra)
        cls = _KINDS[kind]
    except KeyError as exc:
        raise InvalidArgument(f"bad sequence descriptor {desc!r}: missing {exc}") from None
    try:
        return cls(**{k: float(v) for k, v in params.items()}, **extra)
    except TypeError as exc:
        raise InvalidArgument(f"bad parameters for {kind!r}: {exc}") from None


# ---------------------------------------------------------------------------
# decay-rate estimators

def dyadic_points(horizon: int, start: int = 2) -> list[int]:
    """Powers of two in [start, horizon]."""
    pts = []
    n = 1
    while n < start:
        n *= 2
    while n <= horizon:
        pts.append(n)
        n *= 2
    return pts


def local_slopes(seq: DecreasingSequence, horizon: int,
                 sample_points: Iterable[int] | None = None) -> dict[int, float]:
    """Map each sample point n to -log(x_n) / log(n)."""
    pts = sorted(set(int(n) for n in (
        sample_points if sample_points is not None else dyadic_points(horizon))))
    if not pts:
        raise InvalidArgument("empty sample set")
    if pts[0] < 2 or pts[-1] > horizon:
        raise InvalidArgument("sample points must lie in [2, horizon]")
    logs = [seq.log_value(n) for n in pts]
    if not all(math.isfinite(v) for v in logs):
        raise InvalidSequence("sequence has non-positive values on the sample set")
    if any(b > a for a, b in zip(logs, logs[1:])):
        raise InvalidSequence("sequence is not monotone on the sampled range")
    return {n: -lv / math.log(n) for n, lv in zip(pts, logs)}


def estimate_decay_low(seq: DecreasingSequence, horizon: int,
                       sample_points: Iterable[int] | None = None) -> float:
    """Smallest local slope over the sample (finite-data liminf estimate)."""
    return min(local_slopes(seq, horizon, sample_points).values())


def estimate_decay_up(seq: DecreasingSequence, horizon: int,
                      sample_points: Iterable[int] | None = None) -> float:
    """Largest local slope over the sample (finite-data limsup estimate)."""
    return max(local_slopes(seq, horizon, sample_points).values())


def partial_power_sum(seq: DecreasingSequence, alpha: float, N: int) -> float:
    """sum_{j <= N} x_j**(1/alpha), accumulated with exact rounding (math.fsum)."""
    if not alpha > 0:
        raise InvalidArgument("alpha must be positive")
    if N < 1:
        raise InvalidArgument("N must be at least 1")
    parts = []
    chunk = 1 << 20
    for start in range(1, N + 1, chunk):
        ns = np.arange(start, min(N, start + chunk - 1) + 1, dtype=np.int64)
        try:
            terms = seq.values(ns) ** (1.0 / alpha)
        except OutOfRange:
            terms = np.exp(seq.log_values(ns) / alpha)
        parts.append(math.fsum(terms))
    return math.fsum(parts)


@dataclass(frozen=True)
class SandwichReport:
    c_low: float
    c_up: float
    argmin: int
    argmax: int
    horizon: int

    @property
    def holds(self) -> bool:
        return self.c_low > 0 and math.isfinite(self.c_up)


def check_sandwich(seq: DecreasingSequence, p1: float, p2: float, horizon: int) -> SandwichReport:
    """Constants of c_low * n^-p1 <= x_n <= c_up * n^-p2 on [1, horizon]."""
    if not p1 > p2 > 0:
        raise InvalidArgument("need p1 > p2 > 0")
    best_lo, arg_lo = INF, 0
    best_up, arg_up = -INF, 0
    chunk = 1 << 20
    for start in range(1, horizon + 1, chunk):
        ns = np.arange(start, min(horizon, start + chunk - 1) + 1, dtype=np.int64)
        logs = seq.log_values(ns)
        logn = np.log(ns.astype(float))
        a = logs + p1 * logn
        b = logs + p2 * logn
        i, k = int(np.argmin(a)), int(np.argmax(b))
        if a[i] < best_lo:
            best_lo, arg_lo = float(a[i]), int(ns[i])
        if b[k] > best_up:
            best_up, arg_up = float(b[k]), int(ns[k])
    return SandwichReport(math.exp(best_lo), math.exp(best_up), arg_lo, arg_up, horizon)


def block_points(kind: str, count: int = 4) -> list[int]:
    """Sample indices of the block sequence for the first ``count`` jumps.

    ``"pre_jump"`` gives n_{k+1} - 1 and ``"block_start"`` gives n_{k+1} for
    k = 1..count, dropping n = 1 where log-slopes are undefined.
    """
    b = _REMARK_BOUNDARIES[1:count + 1]
    if kind == "pre_jump":
        pts: Sequence[int] = [n - 1 for n in b]
    elif kind == "block_start":
        pts = list(b)
    else:
        raise InvalidArgument(f"unknown block point kind {kind!r}")
    return [n for n in pts if n >= 2]
