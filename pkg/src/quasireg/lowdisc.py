"""Low-discrepancy symbol streams with exact rational quotas.

The generator serves symbols by an earliest-deadline-first rule on exact
integer arithmetic:

* symbol i, having been emitted c times, becomes *eligible* at position
  floor(c/p_i) + 1 (its release) and must be emitted again no later than
  position ceil((c+1)/p_i) (its deadline);
* each step emits the eligible symbol with the smallest deadline, breaking
  ties toward the larger probability, then the smaller id.

This keeps every prefix count within 1 of n*p_i on both sides, and every
window count within 2 of N*p_i.  The stream is fully deterministic.

The hot loop has a numba-compiled fast path (used automatically when numba
is importable); :func:`lowdisc_next` is the pure-Python reference that the
tests cross-check against it step by step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

import numpy as np

from .seqcore import Dist

__all__ = [
    "LowDiscState",
    "lowdisc_next",
    "lowdisc_prefix",
    "lowdisc_stream",
    "lowdisc_window_check",
    "window_counts",
]

CHUNK = 1 << 16


def _kernel(nums, dens, counts, start_pos, out):  # pragma: no cover - compiled
    k = nums.shape[0]
    n = out.shape[0]
    for t in range(n):
        pos = start_pos + t
        best = -1
        best_d = 0
        for i in range(k):
            c = counts[i]
            if (c * dens[i]) // nums[i] < pos:
                d = ((c + 1) * dens[i] + nums[i] - 1) // nums[i]
                if best < 0 or d < best_d:
                    best = i
                    best_d = d
        out[t] = best
        counts[best] += 1


_kernel_py = _kernel
try:  # optional fast path
    from numba import njit

    _kernel = njit(cache=True)(_kernel)
except ImportError:  # pragma: no cover
    pass


def _pref_order(dist: Dist) -> list[int]:
    # ties go to the larger probability, then the smaller id
    return sorted(range(dist.k), key=lambda i: (-dist.probs[i], i))


@dataclass
class LowDiscState:
    """Resumable generator state: per-symbol emission counts and position."""

    dist: Dist
    counts: list[int]
    pos: int = 1  # next position to fill, 1-based
    _order: list[int] = field(init=False, repr=False)

    def __post_init__(self):
        if len(self.counts) != self.dist.k:
            raise ValueError("counts length mismatch")
        self._order = _pref_order(self.dist)

    @classmethod
    def fresh(cls, dist: Dist) -> "LowDiscState":
        return cls(dist, [0] * dist.k)


def lowdisc_next(state: LowDiscState) -> int:
    """Advance the state one position; return the emitted symbol id.

    Reference implementation in exact Python integers.
    """
    best = -1
    best_d = 0
    for i in state._order:
        p = state.dist.probs[i]
        c = state.counts[i]
        if (c * p.denominator) // p.numerator < state.pos:
            d = -((-(c + 1) * p.denominator) // p.numerator)  # ceil
            if best < 0 or d < best_d:
                best, best_d = i, d
    if best < 0:  # cannot happen: counts sum to pos-1 < pos
        raise RuntimeError("no eligible symbol; quota invariant broken")
    state.counts[best] += 1
    state.pos += 1
    return best


class _KernelDriver:
    """Shared machinery: run the compiled kernel in preference order."""

    def __init__(self, dist: Dist):
        order = _pref_order(dist)
        self.dist = dist
        self.perm = np.array(order, dtype=np.int64)
        self.nums = np.array([dist.probs[i].numerator for i in order], dtype=np.int64)
        self.dens = np.array([dist.probs[i].denominator for i in order], dtype=np.int64)
        self.counts = np.zeros(dist.k, dtype=np.int64)
        self.pos = 1
        # c*den must stay inside int64 for the compiled path
        self._exact_limit = (2**62) // int(self.dens.max())

    def take(self, n: int) -> np.ndarray:
        out = np.empty(n, dtype=np.int64)
        if self.pos + n < self._exact_limit:
            _kernel(self.nums, self.dens, self.counts, self.pos, out)
        else:  # pragma: no cover - beyond int64-safe positions
            self._take_bigint(n, out)
        self.pos += n
        return self.perm[out]

    def _take_bigint(self, n, out):  # pragma: no cover - slow exact fallback
        counts = [int(c) for c in self.counts]
        nums = [int(x) for x in self.nums]
        dens = [int(x) for x in self.dens]
        k = len(nums)
        for t in range(n):
            pos = self.pos + t
            best, best_d = -1, 0
            for i in range(k):
                if (counts[i] * dens[i]) // nums[i] < pos:
                    d = ((counts[i] + 1) * dens[i] + nums[i] - 1) // nums[i]
                    if best < 0 or d < best_d:
                        best, best_d = i, d
            out[t] = best
            counts[best] += 1
        self.counts[:] = counts


def lowdisc_prefix(dist: Dist, n: int) -> np.ndarray:
    """First n symbols of the stream as an int64 array."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return _KernelDriver(dist).take(n)


def lowdisc_stream(dist: Dist, chunk: int = CHUNK) -> Iterator[np.ndarray]:
    """Infinite stream, yielded in arrays of ``chunk`` symbols."""
    drv = _KernelDriver(dist)
    while True:
        yield drv.take(chunk)


def window_counts(prefix, dist: Dist) -> np.ndarray:
    """(k, n+1) cumulative count table; row s, column i = #s in prefix[:i]."""
    arr = np.asarray(prefix, dtype=np.int64)
    k = dist.k
    cum = np.zeros((k, arr.size + 1), dtype=np.int64)
    for s in range(k):
        np.cumsum(arr == s, out=cum[s, 1:])
    return cum


def lowdisc_window_check(prefix, dist: Dist, start, length, cum=None):
    """Is |count in [start, start+length) - length*p| < 2 for every symbol?

    ``start`` is 1-based.  ``start``/``length`` may be scalars or arrays of
    windows (checked together); pass a precomputed :func:`window_counts`
    table via ``cum`` when checking many windows of one prefix.
    """
    arr = np.asarray(prefix, dtype=np.int64)
    if cum is None:
        cum = window_counts(arr, dist)
    start = np.asarray(start, dtype=np.int64)
    length = np.asarray(length, dtype=np.int64)
    if (start < 1).any() or (start + length - 1 > arr.size).any():
        raise ValueError("window out of range")
    ok = True
    for s, p in enumerate(dist.probs):
        c = cum[s, start + length - 1] - cum[s, start - 1]
        dev = np.abs(c * p.denominator - length * p.numerator)
        ok &= bool((dev < 2 * p.denominator).all())
    return ok
