"""Core types and measurements for symbol sequences.

A sequence here is a finite prefix of an infinite word over a small alphabet,
stored as an integer array (symbol ids are dense in [0, k)).  The measurements
this module provides are the ones the generators in the rest of the package
are judged against:

* gap statistics -- for every symbol, the min/max distance between
  consecutive occurrences in the prefix;
* the observed regularity ratio (largest gap over smallest gap, worst
  symbol);
* the windowed regularity ratio ``qr_k`` of an increasing position function,
  which compares the fastest and slowest average growth over windows of at
  least k steps;
* exact counting discrepancy |count(n) - n*p| against a rational target
  distribution, computed with integer arithmetic (no float rounding).

Everything rational is a ``fractions.Fraction``; measurements are exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "ContractError",
    "Dist",
    "SymbolGaps",
    "GapStats",
    "gap_stats",
    "qr_observed",
    "qr_k",
    "empirical_density",
    "discrepancy",
    "check_min_gap_bound",
    "stale_symbols",
    "as_positions",
    "StreamAnalyzer",
]


class ContractError(RuntimeError):
    """A verified output property failed to hold (a bug, not bad input)."""


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        # floats are almost never what the caller wants for an exact target;
        # accept them but go through the decimal string so 0.1 means 1/10.
        return Fraction(repr(x))
    raise TypeError(f"cannot interpret {x!r} as an exact rational")


@dataclass(frozen=True)
class Dist:
    """A rational probability distribution over symbols 0..k-1.

    ``probs[i]`` is the exact probability of symbol i.  ``names`` optionally
    gives display names (used by the CLI); internally everything is ids.
    """

    probs: tuple[Fraction, ...]
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        if len(self.probs) == 0:
            raise ValueError("empty distribution")
        for p in self.probs:
            if not isinstance(p, Fraction):
                raise TypeError("Dist.probs must contain Fractions")
            if p <= 0:
                raise ValueError(f"probabilities must be positive, got {p}")
        if sum(self.probs) != 1:
            raise ValueError(f"probabilities sum to {sum(self.probs)}, not 1")
        if self.names is not None:
            if len(self.names) != len(self.probs):
                raise ValueError("names/probs length mismatch")
            if len(set(self.names)) != len(self.names):
                raise ValueError("duplicate symbol names")

    @classmethod
    def make(cls, probs: Iterable, names: Sequence[str] | None = None) -> "Dist":
        """Build a Dist from ints, strings like "1/3", Fractions, or decimals."""
        ps = tuple(_as_fraction(p) for p in probs)
        return cls(ps, tuple(names) if names is not None else None)

    @property
    def k(self) -> int:
        return len(self.probs)

    def name_of(self, sym: int) -> str:
        if self.names is not None:
            return self.names[sym]
        return str(sym)

    def id_of(self, name: str) -> int:
        if self.names is not None:
            return self.names.index(name)
        return int(name)


@dataclass(frozen=True)
class SymbolGaps:
    first: int
    last: int
    count: int
    min_gap: int | None  # None when fewer than two occurrences
    max_gap: int | None


@dataclass(frozen=True)
class GapStats:
    per: dict[int, SymbolGaps]
    length: int


def _grouped_positions(arr: np.ndarray):
    """Yield (symbol, positions) with 1-based ascending positions per symbol."""
    n = arr.size
    if n == 0:
        return
    order = np.argsort(arr, kind="stable")
    syms = arr[order]
    pos = order.astype(np.int64) + 1
    starts = np.flatnonzero(np.r_[True, syms[1:] != syms[:-1]])
    ends = np.r_[starts[1:], n]
    for b, e in zip(starts, ends):
        yield int(syms[b]), pos[b:e]


def gap_stats(seq) -> GapStats:
    """Per-symbol occurrence statistics of a finite prefix.

    Gaps are differences of consecutive occurrence positions; runs touching
    the prefix boundary are not counted as gaps (they are visible through
    ``first``/``last`` instead).
    """
    arr = np.asarray(seq, dtype=np.int64)
    per: dict[int, SymbolGaps] = {}
    for sym, pos in _grouped_positions(arr):
        if pos.size >= 2:
            gaps = np.diff(pos)
            mn, mx = int(gaps.min()), int(gaps.max())
        else:
            mn = mx = None
        per[sym] = SymbolGaps(
            first=int(pos[0]), last=int(pos[-1]), count=int(pos.size),
            min_gap=mn, max_gap=mx,
        )
    return GapStats(per=per, length=int(arr.size))


def qr_observed(stats: GapStats) -> Fraction:
    """Worst max-gap/min-gap ratio over all symbols in the prefix.

    Symbols with at most one occurrence contribute 1 (nothing to compare).
    """
    best = Fraction(1)
    for g in stats.per.values():
        if g.min_gap is None:
            continue
        r = Fraction(g.max_gap, g.min_gap)
        if r > best:
            best = r
    return best


def as_positions(f) -> np.ndarray:
    """Validate and return a sample of an increasing position function."""
    arr = np.asarray(f, dtype=np.int64)
    if arr.ndim != 1:
        raise ValueError("position sample must be one-dimensional")
    if arr.size and arr[0] < 1:
        raise ValueError("positions must be >= 1")
    if arr.size >= 2 and not (np.diff(arr) > 0).all():
        raise ValueError("positions must be strictly increasing")
    return arr


def qr_k(f, k: int) -> Fraction:
    """Windowed regularity ratio of an increasing position sample.

    Over all windows of r >= k steps, compare the largest average step
    (span/steps) to the smallest:

        qr_k(f) = max_{r>=k,n} (f[n+r]-f[n])/r  /  min_{q>=k,m} (f[m+q]-f[m])/q

    Exact: window spans are integers and comparisons are cross-multiplied.
    For k = 1 this equals max-gap/min-gap, which is used as a fast path.
    """
    arr = as_positions(f)
    if k < 1:
        raise ValueError("k must be >= 1")
    m = arr.size
    if m <= k:
        raise ValueError(f"need more than k={k} samples, got {m}")
    if k == 1:
        d = np.diff(arr)
        return Fraction(int(d.max()), int(d.min()))
    max_num, max_den = 0, 1  # largest span/steps
    min_num, min_den = None, None
    for r in range(k, m):
        spans = arr[r:] - arr[:-r]
        hi = int(spans.max())
        lo = int(spans.min())
        if hi * max_den > max_num * r:
            max_num, max_den = hi, r
        if min_num is None or lo * min_den < min_num * r:
            min_num, min_den = lo, r
    return Fraction(max_num * min_den, max_den * min_num)


def empirical_density(seq) -> dict[int, Fraction]:
    arr = np.asarray(seq, dtype=np.int64)
    n = arr.size
    if n == 0:
        return {}
    counts = np.bincount(arr)
    return {s: Fraction(int(c), n) for s, c in enumerate(counts) if c > 0}


def _dev_candidates(pos: np.ndarray, num: int, den: int, n_total: int, count: int):
    """Max |count(n)*den - n*num| over n in [1, n_total] for one symbol.

    count(n) is a step function that jumps at each occurrence and the
    deviation moves linearly in between, so the sup is attained at an
    occurrence, just before one, or at the end of the prefix.
    Returns the integer max (units of 1/den).
    """
    best = 0
    if pos.size:
        if int(pos[0]) > 1:
            best = (int(pos[0]) - 1) * num  # count still 0 just before first
        j = np.arange(1, pos.size + 1, dtype=object)
        at = np.abs(j * den - pos.astype(object) * num)
        best = max(best, int(at.max()))
        if pos.size >= 2:
            pre = np.abs(j[:-1] * den - (pos[1:].astype(object) - 1) * num)
            best = max(best, int(pre.max()))
    best = max(best, abs(count * den - n_total * num))
    return best


def discrepancy(seq, dist: Dist) -> tuple[Fraction, dict[int, Fraction]]:
    """Exact sup_n max_sym |count_sym(n) - n*p_sym| over the prefix.

    Returns (overall max, per-symbol max).  All arithmetic is integer, so
    the result is exact for any rational target.
    """
    arr = np.asarray(seq, dtype=np.int64)
    n = arr.size
    per: dict[int, Fraction] = {}
    seen: dict[int, np.ndarray] = dict(_grouped_positions(arr))
    overall = Fraction(0)
    for s, p in enumerate(dist.probs):
        pos = seen.get(s, np.empty(0, dtype=np.int64))
        num, den = p.numerator, p.denominator
        if n and n * num < 2**62 and pos.size * den < 2**62:
            # int64 is safe; avoid the object-dtype slow path
            best = 0
            if pos.size:
                if int(pos[0]) > 1:
                    best = (int(pos[0]) - 1) * num
                j = np.arange(1, pos.size + 1, dtype=np.int64)
                best = max(best, int(np.abs(j * den - pos * num).max()))
                if pos.size >= 2:
                    best = max(best, int(np.abs(j[:-1] * den - (pos[1:] - 1) * num).max()))
            best = max(best, abs(pos.size * den - n * num))
        else:
            best = _dev_candidates(pos, num, den, n, int(pos.size))
        d = Fraction(best, den)
        per[s] = d
        if d > overall:
            overall = d
    return overall, per


def check_min_gap_bound(f, claimed_density) -> bool:
    """Check the structural lower bound min-gap >= 1/(density * qr).

    ``f`` is a position sample of a single symbol; ``claimed_density`` is the
    density the caller asserts for it.  For a truthful density the bound is a
    theorem, so False means the claim is inconsistent with the sample.
    """
    arr = as_positions(f)
    d = _as_fraction(claimed_density)
    if d <= 0 or d > 1:
        raise ValueError("claimed density must be in (0, 1]")
    if arr.size < 2:
        return True
    gaps = np.diff(arr)
    qr = Fraction(int(gaps.max()), int(gaps.min()))
    bound = 1 / (d * qr)
    return Fraction(int(gaps.min())) >= bound


def stale_symbols(stats: GapStats) -> list[int]:
    """Symbols that vanished: unseen for more than twice their max gap."""
    out = []
    for s, g in stats.per.items():
        if g.max_gap is not None and stats.length - g.last > 2 * g.max_gap:
            out.append(s)
    return out


class StreamAnalyzer:
    """Incremental gap/discrepancy statistics over a chunked stream.

    Feed chunks (numpy arrays of symbol ids) with :meth:`update`; memory use
    is O(alphabet), so arbitrarily long streams can be checked.  The
    discrepancy tracking is exact: within a chunk the deviation extremes are
    probed at occurrence endpoints, and the chunk boundary itself is always
    probed for every symbol.
    """

    def __init__(self, dist: Dist):
        k = dist.k
        self.dist = dist
        self.n = 0
        self.counts = np.zeros(k, dtype=np.int64)
        self.first = np.zeros(k, dtype=np.int64)  # 0 = unseen
        self.last = np.zeros(k, dtype=np.int64)
        self.min_gap = np.full(k, np.iinfo(np.int64).max, dtype=np.int64)
        self.max_gap = np.zeros(k, dtype=np.int64)
        self._nums = np.array([p.numerator for p in dist.probs], dtype=np.int64)
        self._dens = np.array([p.denominator for p in dist.probs], dtype=np.int64)
        self._dev = np.zeros(k, dtype=np.int64)  # max |c*den - n*num| per symbol

    def update(self, chunk) -> None:
        arr = np.asarray(chunk, dtype=np.int64)
        if arr.size == 0:
            return
        if arr.min() < 0 or arr.max() >= self.dist.k:
            raise ValueError("symbol id outside the distribution's alphabet")
        base = self.n
        for s, local in _grouped_positions(arr):
            pos = local + base
            num, den = int(self._nums[s]), int(self._dens[s])
            c0 = int(self.counts[s])
            # gaps, linking across the chunk boundary
            if self.last[s] > 0:
                link = np.concatenate(([self.last[s]], pos))
            else:
                link = pos
                self.first[s] = pos[0]
            if link.size >= 2:
                gaps = np.diff(link)
                self.min_gap[s] = min(self.min_gap[s], int(gaps.min()))
                self.max_gap[s] = max(self.max_gap[s], int(gaps.max()))
            self.last[s] = pos[-1]
            # deviation probes at occurrences and just before each one
            j = np.arange(c0 + 1, c0 + pos.size + 1, dtype=np.int64)
            dev = int(np.abs(j * den - pos * num).max())
            dev = max(dev, int(np.abs((j - 1) * den - (pos - 1) * num).max()))
            self._dev[s] = max(self._dev[s], dev)
            self.counts[s] = c0 + pos.size
        self.n = base + arr.size
        # boundary probe for every symbol (covers symbols absent from the chunk)
        end_dev = np.abs(self.counts * self._dens - self.n * self._nums)
        np.maximum(self._dev, end_dev, out=self._dev)

    def gap_statistics(self) -> GapStats:
        per = {}
        for s in range(self.dist.k):
            if self.counts[s] == 0:
                continue
            seen2 = self.counts[s] >= 2
            per[s] = SymbolGaps(
                first=int(self.first[s]), last=int(self.last[s]),
                count=int(self.counts[s]),
                min_gap=int(self.min_gap[s]) if seen2 else None,
                max_gap=int(self.max_gap[s]) if seen2 else None,
            )
        return GapStats(per=per, length=self.n)

    def max_discrepancy(self) -> Fraction:
        best = Fraction(0)
        for s in range(self.dist.k):
            d = Fraction(int(self._dev[s]), int(self._dens[s]))
            if d > best:
                best = d
        return best

    def density_errors(self) -> dict[int, Fraction]:
        if self.n == 0:
            return {}
        return {
            s: abs(Fraction(int(self.counts[s]), self.n) - self.dist.probs[s])
            for s in range(self.dist.k)
        }
