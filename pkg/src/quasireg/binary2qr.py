"""Streams with gap ratio at most 2 for arbitrary exact rational densities.

Pipeline, bottom up:

* ``frame_of`` boxes every probability into a dyadic interval
  [2^-e, 2^-(e-1)] and fixes a block length 2^M with M = max e + 5.
* A *dyadic vertex distribution* (``PBA``) has every coordinate on a box
  endpoint except at most one (its ``irr`` coordinate).  Any distribution in
  the box decomposes exactly as a convex combination of such vertices
  (``pba_decompose``), and any two vertices are linked by a chain of
  adjacent vertices (``pba_step``).
* ``huffman_uniform`` realizes a vertex as a block of 2^M symbols in which
  every symbol occupies a saturated arithmetic progression sandwich: a full
  residue class mod 2^e inside its positions, positions inside a class mod
  2^(e-1).  Consecutive occurrences then differ by 2^(e-1) or 2^e exactly.
* ``connect`` searches for a short *bridge string* between two such blocks
  (same gap windows maintained across the junctions), and ``assemble_2qr``
  glues bridges and repeated blocks into an infinite stream whose symbol
  densities converge to the requested distribution while every gap of
  symbol s stays within [2^(e_s - 1), 2^e_s] -- a gap ratio of at most 2.

Blocks may live on sparse index sets (a string is a partial map from
positions to symbols); the assembly only uses full intervals, but the
algebra (translate / union / concat / window / diamond) follows the general
definitions so the invariants can be property-tested.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .lowdisc import lowdisc_stream
from .seqcore import Dist

__all__ = [
    "SENTINEL",
    "Frame",
    "PBA",
    "Block",
    "frame_of",
    "pba_box",
    "validate_pba",
    "pba_enumerate",
    "convex_decompose_box",
    "pba_decompose",
    "pba_adjacent",
    "pba_step",
    "pba_path",
    "block_from_chars",
    "blocks_equal",
    "translate",
    "union",
    "max_n",
    "concat_n",
    "window",
    "diamond_n",
    "block_gaps",
    "verify_compatible",
    "huffman_uniform",
    "verify_uniform",
    "connect",
    "verify_connection",
    "ConnectError",
    "Assembly2QR",
    "assemble_2qr",
]

SENTINEL = -1  # "no symbol": used as the irr id of a vertex with no interior coordinate

ENUM_GUARD = 1 << 20
DEFAULT_MAX_M = 14
CONNECT_KMAX = 8
CONNECT_NODE_CAP = 50_000
CONNECT_MASKS = 8


class ConnectError(RuntimeError):
    """No bridge string found within the search bounds."""


@dataclass(frozen=True)
class Frame:
    """Per-symbol dyadic exponents e_s and the block scale M."""

    exponents: tuple[int, ...]
    M: int

    @property
    def k(self) -> int:
        return len(self.exponents)

    @property
    def block(self) -> int:
        return 1 << self.M


@dataclass(frozen=True)
class PBA:
    """A box-vertex distribution: <=1 coordinate off the dyadic endpoints."""

    probs: tuple[Fraction, ...]
    irr: int  # symbol id of the interior coordinate, or SENTINEL

    def key(self):
        return self.probs


def frame_of(dist: Dist, extra: int = 5) -> Frame:
    """Exponents with 2^-e <= p <= 2^-(e-1) (powers of two take the smaller e)."""
    exps = []
    for p in dist.probs:
        q = 1 / p  # Fraction
        # smallest e >= 1 with 2^e >= q
        e = 1
        while (1 << e) < q:
            e += 1
        exps.append(e)
    return Frame(tuple(exps), max(exps) + extra)


def pba_box(frame: Frame):
    lo = tuple(Fraction(1, 1 << e) for e in frame.exponents)
    hi = tuple(Fraction(1, 1 << (e - 1)) for e in frame.exponents)
    return lo, hi


def validate_pba(probs: Sequence[Fraction], frame: Frame) -> PBA:
    """Check box membership and the <=1-interior-coordinate rule; return the PBA."""
    lo, hi = pba_box(frame)
    if len(probs) != frame.k:
        raise ValueError("wrong arity for this frame")
    if sum(probs) != 1:
        raise ValueError("probabilities must sum to 1")
    irr = SENTINEL
    for s, p in enumerate(probs):
        if not (lo[s] <= p <= hi[s]):
            raise ValueError(f"coordinate {s}={p} outside [{lo[s]}, {hi[s]}]")
        if lo[s] < p < hi[s]:
            if irr != SENTINEL:
                raise ValueError("two interior coordinates; not a box vertex")
            irr = s
    return PBA(tuple(probs), irr)


def pba_enumerate(frame: Frame) -> list[PBA]:
    """All box vertices summing to 1.  Guarded: 2^k * (k+1) <= 2^20."""
    k = frame.k
    if (1 << k) * (k + 1) > ENUM_GUARD:
        raise ValueError(f"enumeration too large for k={k} symbols")
    lo, hi = pba_box(frame)
    out = {}
    for bits in range(1 << k):
        ps = [hi[s] if bits >> s & 1 else lo[s] for s in range(k)]
        total = sum(ps)
        if total == 1:
            out[tuple(ps)] = PBA(tuple(ps), SENTINEL)
            continue
        # try to absorb the imbalance into a single interior coordinate
        for s in range(k):
            fixed = total - ps[s]
            q = 1 - fixed
            if lo[s] < q < hi[s]:
                cand = list(ps)
                cand[s] = q
                out.setdefault(tuple(cand), PBA(tuple(cand), s))
    return sorted(out.values(), key=lambda v: v.probs)


def convex_decompose_box(p, lo, hi):
    """Write p as an exact convex combination of box vertices (vertex peeling).

    All inputs are Fractions with sum(p) = 1, lo <= p <= hi elementwise.
    Each round peels off a vertex of the current face with the largest
    feasible coefficient; every round fixes at least one new coordinate on
    an endpoint, so there are at most len(p)+1 terms.  Returns
    [(weight, vertex tuple)] with weights summing to 1 exactly.
    """
    k = len(p)
    x = list(p)
    if sum(x) != 1:
        raise ValueError("input must sum to 1")
    for s in range(k):
        if not (lo[s] <= x[s] <= hi[s]):
            raise ValueError(f"coordinate {s} outside its box interval")
    remaining = Fraction(1)
    terms = []
    for _ in range(k + 2):
        interior = [s for s in range(k) if lo[s] < x[s] < hi[s]]
        if len(interior) <= 1:
            terms.append((remaining, tuple(x)))
            break
        # vertex of the current face: keep tight coordinates, push the free
        # ones to lo and then greedily raise them (ascending id) to hi
        v = list(x)
        budget = Fraction(0)
        for s in interior:
            budget += x[s] - lo[s]
            v[s] = lo[s]
        for s in interior:
            room = hi[s] - lo[s]
            step = min(room, budget)
            v[s] = lo[s] + step
            budget -= step
            if budget == 0:
                break
        if budget != 0:
            raise ValueError("box cannot absorb the mass; invalid inputs")
        # largest lam with (x - lam*v)/(1-lam) still inside the box
        lam = None
        for s in range(k):
            if v[s] > x[s]:
                b = (x[s] - lo[s]) / (v[s] - lo[s])
            elif v[s] < x[s]:
                b = (hi[s] - x[s]) / (hi[s] - v[s])
            else:
                continue
            if lam is None or b < lam:
                lam = b
        if lam is None or lam >= 1:
            terms.append((remaining, tuple(v)))
            break
        terms.append((remaining * lam, tuple(v)))
        x = [(x[s] - lam * v[s]) / (1 - lam) for s in range(k)]
        remaining *= 1 - lam
    else:
        raise RuntimeError("vertex peeling failed to terminate")
    return terms


def pba_decompose(dist: Dist, frame: Frame | None = None) -> list[tuple[Fraction, PBA]]:
    """Exact convex decomposition of a distribution into box vertices."""
    if frame is None:
        frame = frame_of(dist)
    lo, hi = pba_box(frame)
    terms = convex_decompose_box(dist.probs, lo, hi)
    out = [(w, validate_pba(v, frame)) for w, v in terms]
    # exact reconstruction sanity
    for s in range(frame.k):
        if sum(w * v.probs[s] for w, v in out) != dist.probs[s]:
            raise RuntimeError("decomposition does not reconstruct the input")
    return out


def pba_adjacent(a: PBA, b: PBA) -> bool:
    diff = [s for s in range(len(a.probs)) if a.probs[s] != b.probs[s]]
    if len(diff) != 2:
        return False
    allowed = set(diff) | {SENTINEL}
    return a.irr in allowed and b.irr in allowed


def pba_step(p: PBA, target: PBA, frame: Frame) -> PBA:
    """One move along the vertex graph from p toward target.

    The step changes exactly two coordinates (one of them p's interior
    coordinate, when it has one) and strictly decreases the potential
    (sum |p-target|, #differing), so iterating reaches the target.
    """
    if p.probs == target.probs:
        raise ValueError("already at the target")
    lo, hi = pba_box(frame)
    k = frame.k
    f = list(p.probs)
    for s in range(k):
        if p.probs[s] > target.probs[s]:
            f[s] = lo[s]
        elif p.probs[s] < target.probs[s]:
            f[s] = hi[s]
        elif s == p.irr and s == target.irr:
            f[s] = hi[s]
    A = [s for s in range(k) if f[s] < p.probs[s]]
    B = [s for s in range(k) if f[s] > p.probs[s]]
    if p.irr != SENTINEL:
        alpha = p.irr
    else:
        alpha = min(A) if A else min(B)
    down = alpha in A  # alpha moves down, partner moves up
    opp = B if down else A
    if opp == [target.irr]:
        beta = target.irr
    else:
        beta = min(s for s in opp if s != target.irr)
    if down:
        eps = min(p.probs[alpha] - f[alpha], f[beta] - p.probs[beta])
    else:
        eps = min(f[alpha] - p.probs[alpha], p.probs[beta] - f[beta])
    new = list(p.probs)
    if down:
        new[alpha] -= eps
        new[beta] += eps
    else:
        new[alpha] += eps
        new[beta] -= eps
    return validate_pba(new, frame)


def pba_path(p: PBA, target: PBA, frame: Frame, cap: int = 10_000) -> list[PBA]:
    """Chain of adjacent vertices from p to target, inclusive."""
    path = [p]
    cur = p
    for _ in range(cap):
        if cur.probs == target.probs:
            return path
        cur = pba_step(cur, target, frame)
        path.append(cur)
    raise RuntimeError("vertex chain did not terminate")


# ---------------------------------------------------------------------------
# blocks (strings on sparse 1-based index sets)


@dataclass(frozen=True, eq=False)
class Block:
    """A partial string: sorted 1-based positions and their symbols."""

    offs: np.ndarray  # int64, strictly increasing, >= 1
    chars: np.ndarray  # int32

    def __len__(self):
        return int(self.offs.size)

    def span(self):
        return int(self.offs[0]), int(self.offs[-1])

    def symbols(self) -> set[int]:
        return set(np.unique(self.chars).tolist())

    def tobytes(self) -> bytes:
        return self.offs.tobytes() + b"|" + self.chars.tobytes()


def block_from_chars(chars, offset: int = 0) -> Block:
    c = np.asarray(chars, dtype=np.int32)
    offs = np.arange(1 + offset, 1 + offset + c.size, dtype=np.int64)
    return Block(offs, c)


def blocks_equal(a: Block, b: Block) -> bool:
    return np.array_equal(a.offs, b.offs) and np.array_equal(a.chars, b.chars)


def translate(s: Block, delta: int) -> Block:
    if s.offs.size and int(s.offs[0]) + delta < 1:
        raise ValueError("translation would push positions below 1")
    return Block(s.offs + delta, s.chars)


def union(s: Block, t: Block) -> Block:
    offs = np.concatenate([s.offs, t.offs])
    chars = np.concatenate([s.chars, t.chars])
    order = np.argsort(offs, kind="stable")
    offs, chars = offs[order], chars[order]
    if offs.size >= 2 and (np.diff(offs) == 0).any():
        raise ValueError("domains overlap")
    return Block(offs, chars)


def max_n(s: Block, frame: Frame) -> int:
    """Number of length-2^M windows needed to cover the domain."""
    if not len(s):
        raise ValueError("empty string")
    top = int(s.offs[-1])
    return -(-top // frame.block)


def concat_n(s: Block, t: Block, frame: Frame) -> Block:
    """Place t after s, aligned to the next block boundary."""
    return union(s, translate(t, max_n(s, frame) * frame.block))


def window(s: Block, frame: Frame, j: int) -> Block:
    """The j-th length-2^M window of s, shifted back to [1, 2^M].

    j = -1 means the last window (j = max_n).
    """
    if j == -1:
        j = max_n(s, frame)
    if j < 1:
        raise ValueError("window index must be >= 1 or -1")
    blk = frame.block
    lo, hi = (j - 1) * blk + 1, j * blk
    i = np.searchsorted(s.offs, lo, side="left")
    e = np.searchsorted(s.offs, hi, side="right")
    return Block(s.offs[i:e] - (j - 1) * blk, s.chars[i:e])


def diamond_n(s: Block, t: Block, frame: Frame) -> Block:
    """Overlap-glue: s's last window must equal t's first window."""
    if not blocks_equal(window(s, frame, -1), window(t, frame, 1)):
        raise ValueError("overlap windows disagree; cannot glue")
    m = max_n(s, frame)
    cut = (m - 1) * frame.block
    i = np.searchsorted(s.offs, cut, side="right")
    head = Block(s.offs[:i], s.chars[:i])
    if i == 0:
        return translate(t, 0)
    return concat_n(head, t, frame)


def block_gaps(s: Block) -> dict[int, tuple[int | None, int]]:
    """Per-symbol (min_gap, max_gap) with boundary runs counted in max_gap.

    max_gap is the longest stretch between two domain points with no
    occurrence strictly inside; runs touching the domain ends count (the
    endpoints of a stretch need not carry the symbol).  min_gap is the
    smallest distance between consecutive occurrences (None if <2).
    """
    out = {}
    if not len(s):
        return out
    lo, hi = s.span()
    order = np.argsort(s.chars, kind="stable")
    syms = s.chars[order]
    pos = s.offs[order]
    starts = np.flatnonzero(np.r_[True, syms[1:] != syms[:-1]])
    ends = np.r_[starts[1:], syms.size]
    for b, e in zip(starts, ends):
        occ = np.sort(pos[b:e])
        mx = max(int(occ[0]) - lo, hi - int(occ[-1]))
        if occ.size >= 2:
            d = np.diff(occ)
            mn = int(d.min())
            mx = max(mx, int(d.max()))
        else:
            mn = None
        out[int(syms[b])] = (mn, mx)
    return out


def verify_compatible(s: Block, frame: Frame, local: bool = False) -> bool:
    """Are all gaps of every symbol inside [2^(e-1), 2^e]?

    ``local`` restricts the check to symbols that actually occur in s
    (a bridge string is only constrained on its own symbols).
    """
    gaps = block_gaps(s)
    if not len(s):
        return True
    lo, hi = s.span()
    for sym in range(frame.k):
        e = frame.exponents[sym]
        if sym not in gaps:
            if local:
                continue
            if hi - lo > (1 << e):  # absent symbol: the whole span is a gap
                return False
            continue
        mn, mx = gaps[sym]
        if mx > (1 << e):
            return False
        if mn is not None and mn < (1 << (e - 1)):
            return False
    return True


# ---------------------------------------------------------------------------
# uniform blocks


def _binary_terms(x: Fraction) -> list[int]:
    """Exponents e with x = sum 2^-e (finite dyadic expansion, ascending e)."""
    out = []
    num, den = x.numerator, x.denominator
    if den & (den - 1):
        raise ValueError(f"{x} has no finite binary expansion")
    e = 0
    while num:
        e += 1
        num *= 2
        if num >= den:
            out.append(e)
            num -= den
    return out


def huffman_uniform(frame: Frame, p: PBA) -> Block:
    """Canonical uniform block for a box vertex.

    Weights are p_s for endpoint symbols plus the dyadic expansion pieces of
    the interior coordinate (starred).  Merging the two smallest weights,
    starred first among equals, yields a perfect dyadic tree; a leaf at
    depth d covers the positions congruent to its root-path bits mod 2^d
    (first step = least significant bit).
    """
    M = frame.M
    heap = []
    seq = 0
    for s, prob in enumerate(p.probs):
        if s == p.irr:
            for e in _binary_terms(prob):
                heap.append((Fraction(1, 1 << e), 0, seq, ("leaf", s)))
                seq += 1
        else:
            heap.append((prob, 1, seq, ("leaf", s)))
            seq += 1
    heapq.heapify(heap)
    while len(heap) > 1:
        w1, st1, _, n1 = heapq.heappop(heap)
        w2, st2, _, n2 = heapq.heappop(heap)
        heapq.heappush(heap, (w1 + w2, min(st1, st2), seq, (n1, n2)))
        seq += 1
    chars = np.full(1 << M, -2, dtype=np.int32)
    stack = [(heap[0][3], 0, 0)]  # node, code, depth
    while stack:
        node, code, depth = stack.pop()
        if node[0] == "leaf":
            sym = node[1]
            chars[code:: 1 << depth] = sym
        else:
            left, right = node
            if depth >= M:
                raise RuntimeError("tree deeper than the block scale")
            stack.append((left, code, depth + 1))
            stack.append((right, code | (1 << depth), depth + 1))
    if (chars < 0).any():
        raise RuntimeError("leaf expansion did not tile the block")
    return block_from_chars(chars)


def verify_uniform(s: Block, frame: Frame, p: PBA) -> bool:
    """Exact density + saturated-AP sandwich check for every symbol."""
    M = frame.M
    blk = frame.block
    if len(s) != blk or int(s.offs[0]) != 1 or int(s.offs[-1]) != blk:
        return False
    if s.offs.size >= 2 and (np.diff(s.offs) != 1).any():
        return False
    counts = np.bincount(s.chars, minlength=frame.k)
    for sym, prob in enumerate(p.probs):
        if Fraction(int(counts[sym]), blk) != prob:
            return False
        e = frame.exponents[sym]
        pos0 = np.flatnonzero(s.chars == sym)  # 0-based
        half = 1 << (e - 1)
        if np.unique(pos0 % half).size != 1:
            return False  # not inside one residue class mod 2^(e-1)
        res = pos0 % (1 << e)
        vals, cnt = np.unique(res, return_counts=True)
        if not (cnt == (blk >> e)).any():
            return False  # no full residue class mod 2^e inside
    return True


# ---------------------------------------------------------------------------
# bridges


def _xor_shift(s: Block, mask: int) -> Block:
    idx = np.arange(s.chars.size, dtype=np.int64) ^ mask
    return block_from_chars(s.chars[idx])


def _first_last(chars: np.ndarray, k: int):
    first = np.full(k, -1, dtype=np.int64)
    last = np.full(k, -1, dtype=np.int64)
    for sym in range(k):
        pos = np.flatnonzero(chars == sym)
        if pos.size:
            first[sym] = pos[0] + 1
            last[sym] = pos[-1] + 1
    return first, last


def _junction_ok(frame: Frame, last_abs, first_next_abs) -> bool:
    for sym in range(frame.k):
        e = frame.exponents[sym]
        g = int(first_next_abs[sym]) - int(last_abs[sym])
        if not ((1 << (e - 1)) <= g <= (1 << e)):
            return False
    return True


def verify_connection(s: Block, s2: Block, t: Block, frame: Frame) -> bool:
    """t bridges s to s2: matching end windows, same alphabet, valid gaps."""
    if s.symbols() != s2.symbols() or t.symbols() != s.symbols():
        return False
    if not blocks_equal(window(t, frame, 1), s):
        return False
    if not blocks_equal(window(t, frame, -1), s2):
        return False
    return verify_compatible(t, frame, local=True)


def _search_middle(frame: Frame, prefix_chars, suffix_chars, kblocks):
    """Fill (kblocks-2) middle blocks between two fixed end blocks.

    Left-to-right earliest-deadline search over single cells with
    release/deadline windows [last + 2^(e-1), last + 2^e], suffix-anchor
    guards and min/max occurrence budgets for pruning.  Deterministic.
    Returns the middle chars array or None.
    """
    blk = frame.block
    k = frame.k
    lows = [1 << (e - 1) for e in frame.exponents]
    highs = [1 << e for e in frame.exponents]
    first_suf = _first_last(suffix_chars, k)[0]
    last_pre = _first_last(prefix_chars, k)[1]
    if (first_suf < 0).any() or (last_pre < 0).any():
        return None  # some symbol missing from an end block
    anchor = [int(first_suf[sym]) + (kblocks - 1) * blk for sym in range(k)]
    last = [int(last_pre[sym]) for sym in range(k)]
    start = blk + 1
    stop = (kblocks - 1) * blk  # last middle position
    n_cells = stop - start + 1
    if n_cells == 0:
        return np.empty(0, dtype=np.int32) if _junction_ok_list(frame, last, anchor) else None

    def budget_ok(x, last_now):
        # cells strictly between x and the suffix, inclusive of x? x is next unfilled
        rem = stop - x + 1
        mn = 0
        mx = 0
        for sym in range(k):
            D = anchor[sym] - last_now[sym]
            if D <= 0:
                return False
            # j hops of size in [2^(e-1), 2^e] must land exactly on the anchor
            j_min = -(-D // highs[sym])
            j_max = D // lows[sym]
            if j_min > j_max:
                return False
            mn += j_min - 1
            mx += j_max - 1
        return mn <= rem <= mx

    if not budget_ok(start, last):
        return None
    middle = np.full(n_cells, -2, dtype=np.int32)
    # iterative DFS; stack holds (candidate list, next index, displaced last)
    stack = []
    x = start
    nodes = 0

    def candidates(xpos):
        cands = []
        for sym in range(k):
            g = xpos - last[sym]
            if g < lows[sym] or g > highs[sym]:
                continue
            # never step inside the dead zone before the suffix anchor
            rest = anchor[sym] - xpos
            if rest != 0 and rest < lows[sym]:
                continue
            if rest == 0:
                continue  # the anchor cell belongs to the suffix
            deadline = last[sym] + highs[sym]
            cands.append((deadline, sym))
        cands.sort()
        return [sym for _, sym in cands]

    cur = candidates(x)
    idx = 0
    while True:
        nodes += 1
        if nodes > CONNECT_NODE_CAP:
            return None
        advanced = False
        while idx < len(cur):
            sym = cur[idx]
            idx += 1
            prev = last[sym]
            last[sym] = x
            if budget_ok(x + 1, last):
                middle[x - start] = sym
                stack.append((cur, idx, sym, prev))
                x += 1
                if x > stop:
                    if _junction_ok_list(frame, last, anchor):
                        return middle
                    # undo and keep searching
                    cur, idx, sym, prev = stack.pop()
                    last[sym] = prev
                    x -= 1
                    continue
                cur = candidates(x)
                idx = 0
                advanced = True
                break
            last[sym] = prev
        if advanced:
            continue
        if not stack:
            return None
        cur, idx, sym, prev = stack.pop()
        last[sym] = prev
        x -= 1
        middle[x - start] = -2


def _junction_ok_list(frame, last, anchor) -> bool:
    for sym in range(frame.k):
        g = anchor[sym] - last[sym]
        e = frame.exponents[sym]
        if not ((1 << (e - 1)) <= g <= (1 << e)):
            return False
    return True


def _variant_junctions(frame: Frame, s: Block, base: Block) -> np.ndarray:
    """Junction feasibility of every XOR-phase variant of ``base`` after s.

    Entry [sym, m] is True when the gap of ``sym`` across the junction from
    s into the mask-m variant (first occurrence of each symbol in that
    variant is min over base positions P of (P xor m) + 1) lies inside the
    symbol's dyadic window.  Vectorized over all masks, chunked to bound
    memory.
    """
    blk = frame.block
    k = frame.k
    last_abs = _first_last(s.chars, k)[1]
    masks = np.arange(blk, dtype=np.int64)
    firsts = np.empty((k, blk), dtype=np.int64)
    step = max(1, (1 << 21) // blk)
    for sym in range(k):
        pos = np.flatnonzero(base.chars == sym).astype(np.int64)
        for a in range(0, blk, step):
            part = masks[a:a + step, None] ^ pos[None, :]
            firsts[sym, a:a + step] = part.min(axis=1)
    firsts += 1
    lows = np.array([1 << (e - 1) for e in frame.exponents], dtype=np.int64)
    highs = np.array([1 << e for e in frame.exponents], dtype=np.int64)
    g = firsts + blk - last_abs[:, None]
    return (g >= lows[:, None]) & (g <= highs[:, None])


def _variant_lasts(frame: Frame, base: Block) -> np.ndarray:
    """Last occurrence (1-based) of every symbol in every XOR variant."""
    blk = frame.block
    k = frame.k
    masks = np.arange(blk, dtype=np.int64)
    lasts = np.empty((k, blk), dtype=np.int64)
    step = max(1, (1 << 21) // blk)
    for sym in range(k):
        pos = np.flatnonzero(base.chars == sym).astype(np.int64)
        for a in range(0, blk, step):
            part = masks[a:a + step, None] ^ pos[None, :]
            lasts[sym, a:a + step] = part.max(axis=1)
    return lasts + 1


def connect(s: Block, target: PBA, frame: Frame,
            k_max: int = CONNECT_KMAX) -> tuple[Block, Block]:
    """Find a uniform block s2 for ``target`` and a bridge string s -> s2.

    Returns (s2, t) with t's first window equal to s, last window equal to
    s2, and every gap inside the dyadic windows.  The terminal block is
    chosen among XOR-phase variants of the canonical uniform block (XOR on
    position bits permutes residue classes, preserving uniformity); for
    each k = 2.. the junction (k=2) or a cell-level search (k>2) is tried.
    Raises ConnectError when nothing is found within the bounds.
    """
    blk = frame.block
    k = frame.k
    base = huffman_uniform(frame, target)
    if len(s) != blk or int(s.offs[0]) != 1:
        raise ValueError("source must be a full block on [1, 2^M]")
    masks = np.arange(blk, dtype=np.int64)
    ok = _variant_junctions(frame, s, base)
    score = ok.sum(axis=0)

    def variant(mask: int) -> np.ndarray:
        return base.chars[masks ^ mask]

    full = np.flatnonzero(ok.all(axis=0))
    if full.size:
        # Several variants may have a perfect junction; prefer the landing
        # block that leaves the NEXT junction the most room.  A variant whose
        # last occurrence of some symbol sits far from the block end pins
        # that symbol's next first occurrence to a sliver, and chains of
        # such landings can strand the stream with no onward bridge at all.
        lows = np.array([1 << (e - 1) for e in frame.exponents],
                        dtype=np.int64)[:, None]
        highs = np.array([1 << e for e in frame.exponents],
                         dtype=np.int64)[:, None]
        d = blk - _variant_lasts(frame, base)[:, full]
        opts = (highs - d) - np.maximum(1, lows - d) + 1
        rank = np.lexsort((full, -opts.sum(axis=0), -opts.min(axis=0)))
        cand_chars = variant(int(full[rank[0]]))
        s2 = block_from_chars(cand_chars)
        t = concat_n(s, s2, frame)
        if verify_connection(s, s2, t, frame):
            return s2, t
        raise RuntimeError("junction-feasible variant failed verification")

    order = np.lexsort((masks, -score))[:CONNECT_MASKS]
    tops = [variant(int(m)) for m in order]
    for kblocks in range(3, k_max + 1):
        for cand_chars in tops:
            middle = _search_middle(frame, s.chars, cand_chars, kblocks)
            if middle is None:
                continue
            s2 = block_from_chars(cand_chars)
            chars = np.concatenate([s.chars, middle, cand_chars])
            t = block_from_chars(chars)
            if verify_connection(s, s2, t, frame):
                return s2, t
            raise RuntimeError("bridge search result failed verification")
    raise ConnectError(
        f"no bridge within {k_max} blocks for target {tuple(map(str, target.probs))}"
    )


# ---------------------------------------------------------------------------
# junction router

ROUTER_STATE_CAP = 32_768  # max (#vertices x block) state space for routing


class _JunctionRouter:
    """Hop planner over (vertex, XOR mask) states with junction-valid edges.

    A state names one uniform variant block; an edge (v,m) -> (w,m2) means
    the two blocks chain with every junction gap inside its dyadic window.
    The router restricts all landings to one strongly connected component
    that covers every requested vertex: any state reached this way can still
    reach every vertex later, so a stream that only lands inside the
    component can never strand itself.  (Outside such a component that does
    happen: sparse-symbol junction constraints only let a variant's residue
    class drift one way, so a few landing choices are absorbing dead ends.)
    """

    def __init__(self, frame: Frame, verts: list[PBA], scc: list[np.ndarray],
                 firsts: np.ndarray, lasts: np.ndarray,
                 pref: Sequence[int] | None = None):
        self.frame = frame
        self.verts = verts
        self.scc = scc            # per vertex: boolean mask membership
        self.firsts = firsts      # (nv, k, blk) first occurrence per mask
        self.lasts = lasts        # (nv, k, blk) last occurrence per mask
        self.pref = list(pref) if pref is not None else list(range(len(verts)))
        # per-state desirability: total weight of vertices in ``need``
        # directly reachable from (vi, m); landing on high-score states
        # keeps later hops one block long
        self.score = [np.zeros(frame.block, dtype=np.int64)
                      for _ in range(len(verts))]
        self._lo = np.array([1 << (e - 1) for e in frame.exponents],
                            dtype=np.int64)[:, None]
        self._hi = np.array([1 << e for e in frame.exponents],
                            dtype=np.int64)[:, None]
        self._blocks: dict[tuple[int, int], Block] = {}
        self._routes: dict = {}
        self._bases = [huffman_uniform(frame, v) for v in verts]

    # -- construction -------------------------------------------------

    @classmethod
    def build(cls, frame: Frame, verts: list[PBA], need: Sequence[int],
              pref: Sequence[int] | None = None,
              weights: Sequence[Fraction] | None = None,
              ) -> "_JunctionRouter | None":
        """Find a component covering the vertex indices in ``need``.

        ``pref`` orders vertices for intermediate-hop choices and
        ``weights`` (aligned with ``need``) scores landing states; both
        bias chains toward the heavily scheduled compositions, which the
        block scheduler can absorb without disturbing densities.
        """
        nv = len(verts)
        blk = frame.block
        if nv * blk > ROUTER_STATE_CAP:
            return None
        firsts = np.empty((nv, frame.k, blk), dtype=np.int64)
        lasts = np.empty((nv, frame.k, blk), dtype=np.int64)
        masks = np.arange(blk, dtype=np.int64)
        for vi, v in enumerate(verts):
            base = huffman_uniform(frame, v)
            for sym in range(frame.k):
                pos = np.flatnonzero(base.chars == sym).astype(np.int64)
                x = masks[:, None] ^ pos[None, :]
                firsts[vi, sym] = x.min(axis=1) + 1
                lasts[vi, sym] = x.max(axis=1) + 1
        router = cls(frame, verts, [], firsts, lasts, pref)
        seeds = [(t, 0) for t in need]
        seeds += [(need[0], m) for m in range(0, blk, max(1, blk // 64))]
        seen = set()
        for vi, m in seeds:
            if (vi, m) in seen:
                continue
            seen.add((vi, m))
            fwd = router._reach(vi, m, forward=True)
            bwd = router._reach(vi, m, forward=False)
            scc = [f & b for f, b in zip(fwd, bwd)]
            if all(scc[t].any() for t in need):
                router.scc = scc
                router._score_states(need, weights)
                return router
        return None

    def _score_states(self, need: Sequence[int],
                      weights: Sequence[Fraction] | None) -> None:
        """Weight of ``need`` vertices one valid junction away, per state."""
        if weights is None:
            nums = [1] * len(need)
        else:
            den = 1
            for w in weights:
                den = den * w.denominator // math.gcd(den, w.denominator)
            nums = [int(w * den) for w in weights]
        blk = self.frame.block
        chunk = max(1, (1 << 22) // blk)
        for vi in range(len(self.verts)):
            for t, num in zip(need, nums):
                tgt = self.scc[t]
                hit = np.zeros(blk, dtype=bool)
                for a in range(0, blk, chunk):
                    g = ((blk - self.lasts[vi][:, a:a + chunk])[:, :, None]
                         + self.firsts[t][:, None, :])
                    ok = ((g >= self._lo[:, :, None])
                          & (g <= self._hi[:, :, None])).all(axis=0)
                    hit[a:a + chunk] = (ok & tgt[None, :]).any(axis=1)
                self.score[vi][hit] += num

    def _reach(self, seed_vi: int, seed_m: int, forward: bool) -> list[np.ndarray]:
        nv = len(self.verts)
        blk = self.frame.block
        R = [np.zeros(blk, dtype=bool) for _ in range(nv)]
        R[seed_vi][seed_m] = True
        frontier = [r.copy() for r in R]
        chunk = max(1, (1 << 22) // blk)
        while True:
            new = [np.zeros(blk, dtype=bool) for _ in range(nv)]
            grew = False
            for vi in range(nv):
                fm = np.flatnonzero(frontier[vi])
                if not fm.size:
                    continue
                for wi in range(nv):
                    hits = np.zeros(blk, dtype=bool)
                    for a in range(0, fm.size, chunk):
                        part = fm[a:a + chunk]
                        if forward:
                            g = ((self.frame.block - self.lasts[vi][:, part])
                                 [:, :, None] + self.firsts[wi][:, None, :])
                        else:
                            g = ((self.frame.block - self.lasts[wi])
                                 [:, None, :] + self.firsts[vi][:, part]
                                 [:, :, None])
                        ok = ((g >= self._lo[:, :, None])
                              & (g <= self._hi[:, :, None])).all(axis=0)
                        hits |= ok.any(axis=0)
                    add = hits & ~R[wi]
                    if add.any():
                        R[wi] |= add
                        new[wi] |= add
                        grew = True
            if not grew:
                return R
            frontier = new

    # -- queries ------------------------------------------------------

    def _best_mask(self, vi: int, cand: np.ndarray) -> int:
        """The highest-score mask among candidates (ties: smallest mask)."""
        return int(cand[np.argmax(self.score[vi][cand])])

    def start_state(self, vi: int) -> tuple[int, int]:
        return (vi, self._best_mask(vi, np.flatnonzero(self.scc[vi])))

    def block_of(self, state: tuple[int, int]) -> Block:
        blkobj = self._blocks.get(state)
        if blkobj is None:
            vi, m = state
            chars = self._bases[vi].chars[np.arange(self.frame.block) ^ m]
            blkobj = block_from_chars(chars)
            if not verify_uniform(blkobj, self.frame, self.verts[vi]):
                raise RuntimeError("routed variant failed the uniformity check")
            t = concat_n(blkobj, blkobj, self.frame)
            if not verify_connection(blkobj, blkobj, t, self.frame):
                raise RuntimeError("routed variant cannot repeat itself")
            self._blocks[state] = blkobj
        return blkobj

    def _landings(self, state: tuple[int, int], wi: int) -> np.ndarray:
        """In-component masks of ``wi`` with a valid junction from state."""
        vi, m = state
        g = self.firsts[wi] + (self.frame.block - self.lasts[vi][:, m])[:, None]
        ok = ((g >= self._lo) & (g <= self._hi)).all(axis=0)
        return ok & self.scc[wi]

    def _two_step(self, state: tuple[int, int],
                  wi: int) -> list[tuple[int, int]] | None:
        """Shortest indirect path, intermediate vertex in preference order."""
        blk = self.frame.block
        lo, hi = self._lo[:, :, None], self._hi[:, :, None]
        tgt = self.scc[wi]
        chunk = max(1, (1 << 22) // blk)
        for u in self.pref:
            mids = np.flatnonzero(self._landings(state, u))
            if not mids.size:
                continue
            feas = np.zeros(blk, dtype=bool)      # reachable target masks
            first_mid = np.zeros(blk, dtype=np.int64)
            for a in range(0, mids.size, chunk):
                part = mids[a:a + chunk]
                g = ((blk - self.lasts[u][:, part])[:, :, None]
                     + self.firsts[wi][:, None, :])
                ok = ((g >= lo) & (g <= hi)).all(axis=0) & tgt[None, :]
                new = ok.any(axis=0) & ~feas
                if new.any():
                    first_mid[new] = part[np.argmax(ok[:, new], axis=0)]
                    feas |= new
            if feas.any():
                cand = np.flatnonzero(feas)
                m2 = self._best_mask(wi, cand)
                return [(u, int(first_mid[m2])), (wi, m2)]
        return None

    def route(self, state: tuple[int, int], wi: int) -> list[tuple[int, int]]:
        """States to hop through (excluding ``state``) to reach vertex wi."""
        key = (state, wi)
        hit = self._routes.get(key)
        if hit is not None:
            return hit
        direct = self._landings(state, wi)
        if direct.any():
            path = [(wi, self._best_mask(wi, np.flatnonzero(direct)))]
            self._routes[key] = path
            return path
        path = self._two_step(state, wi)
        if path is not None:
            self._routes[key] = path
            return path
        nv = len(self.verts)
        blk = self.frame.block
        visited = [np.zeros(blk, dtype=bool) for _ in range(nv)]
        vi0, m0 = state
        visited[vi0][m0] = True
        parent: dict[tuple[int, int], tuple[int, int]] = {}
        queue = [state]
        goal = None
        while queue and goal is None:
            nxt = []
            for u in queue:
                for wv in self.pref:
                    land = self._landings(u, wv) & ~visited[wv]
                    if not land.any():
                        continue
                    for m2 in np.flatnonzero(land):
                        st = (wv, int(m2))
                        visited[wv][m2] = True
                        parent[st] = u
                        nxt.append(st)
                        if wv == wi:
                            goal = st
                            break
                    if goal is not None:
                        break
                if goal is not None:
                    break
            queue = nxt
        if goal is None:
            raise ConnectError(
                f"routing failed inside the connected component toward "
                f"{tuple(map(str, self.verts[wi].probs))}")
        path = [goal]
        while parent[path[-1]] != state:
            path.append(parent[path[-1]])
        path.reverse()
        self._routes[key] = path
        return path


# ---------------------------------------------------------------------------
# assembly


class Assembly2QR:
    """Infinite stream with exact dyadic gap windows for every symbol.

    The stream chains uniform vertex blocks and verified bridge strings, so
    every gap of symbol s lies in [2^(e_s-1), 2^e_s] regardless of the
    visiting order.  Two pacing policies pick that order:

    * ``"balanced"`` (default): per block, greedily either repeat the
      current vertex block or bridge to another vertex, minimizing the
      worst relative symbol deviation after the move (bridge content
      included).  Keeps |density - target| small at every prefix.
    * ``"classic"``: round n emits floor(weight*n)+1 copies of each
      decomposition vertex, cyclically, bridging between them.  Densities
      converge, but slowly when some vertex weight is small.
    """

    def __init__(self, dist: Dist, max_M: int = DEFAULT_MAX_M,
                 k_max: int = CONNECT_KMAX, pacing: str = "balanced"):
        self.dist = dist
        self.frame = frame_of(dist)
        if self.frame.M > max_M:
            raise ValueError(
                f"block scale 2^{self.frame.M} exceeds the cap 2^{max_M}; "
                "denominators too large for this construction")
        if pacing not in ("balanced", "classic"):
            raise ValueError("pacing must be 'balanced' or 'classic'")
        self.pacing = pacing
        self.terms = pba_decompose(dist, self.frame)
        self.k_max = k_max
        self._bridge_cache: dict = {}
        m = len(self.terms)
        # plan hops over a strongly connected set of variant states when the
        # state space is small; the searchy bridge machinery is the fallback
        self.router = None
        self._term_vidx: list[int] = []
        self._state_of: dict[bytes, tuple[int, int]] = {}
        if m > 1:
            verts = pba_enumerate(self.frame)
            vkeys = [v.key() for v in verts]
            self._term_vidx = [vkeys.index(v.key()) for _, v in self.terms]
            by_weight = sorted(range(m), key=lambda i: (-self.terms[i][0], i))
            pref = [self._term_vidx[i] for i in by_weight]
            pref += [vi for vi in range(len(verts)) if vi not in pref]
            self.router = _JunctionRouter.build(
                self.frame, verts, self._term_vidx, pref,
                [w for w, _ in self.terms])

    def _start_block(self, term_idx: int) -> Block:
        """First block of the stream: the term vertex, routable if possible."""
        if self.router is not None:
            state = self.router.start_state(self._term_vidx[term_idx])
            s = self.router.block_of(state)
            self._state_of[s.tobytes()] = state
            return s
        s = huffman_uniform(self.frame, self.terms[term_idx][1])
        if not verify_uniform(s, self.frame, self.terms[term_idx][1]):
            raise RuntimeError("canonical block failed the uniformity check")
        return s

    def _bridge(self, s: Block, target: PBA) -> tuple[Block, Block]:
        key = (s.tobytes(), target.key())
        hit = self._bridge_cache.get(key)
        if hit is None:
            try:
                hit = connect(s, target, self.frame, self.k_max)
            except ConnectError:
                hit = self._bridge_detour(s, target)
            self._bridge_cache[key] = hit
        return hit

    def _bridge_detour(self, s: Block, target: PBA) -> tuple[Block, Block]:
        """Two-hop bridge via an intermediate vertex block.

        The direct search varies only the XOR phase of the target block, and
        the junction demand each symbol places on that phase is a condition
        on the mask's low bits; for a few (source, target) pairs those
        conditions are jointly unsatisfiable at every phase and the
        free-content search finds nothing either.  Landing on a different
        vertex first replaces the source's last-occurrence profile, which
        breaks the deadlock.  Each hop is verified on its own, the overlap
        glue reproduces both hops' content exactly, and the combined string
        is re-verified, so the result satisfies the same contract as a
        direct bridge.  Junction-only hops (two blocks each) are preferred;
        searched middles are a fallback.
        """
        frame = self.frame
        ranked = []
        for w in pba_enumerate(frame):
            if w.key() == target.key():
                continue
            ok = _variant_junctions(frame, s, huffman_uniform(frame, w))
            ranked.append((-int(ok.all(axis=0).sum()), w.probs, w))
        ranked.sort()
        last_err: ConnectError | None = None
        for cap in (2, self.k_max):
            for _, _, w in ranked:
                try:
                    mid, t_a = connect(s, w, frame, cap)
                    land, t_b = connect(mid, target, frame, cap)
                except ConnectError as e:
                    last_err = e
                    continue
                t = diamond_n(t_a, t_b, frame)
                if not verify_connection(s, land, t, frame):
                    raise RuntimeError("two-hop bridge failed verification")
                return land, t
        raise ConnectError(
            f"no bridge to {tuple(map(str, target.probs))}, "
            "even via an intermediate block"
        ) from last_err

    def _bridge_emission(self, s: Block, target_idx: int):
        """Blocks emitted when hopping from block s to the target vertex.

        Returns (arrival block, [chars arrays], total counts, total length).
        """
        if self.router is not None:
            return self._route_emission(s, target_idx)
        frame = self.frame
        chain = []
        # walk the vertex chain from the vertex of s's densities to target
        probs = tuple(Fraction(int(c), frame.block)
                      for c in np.bincount(s.chars, minlength=frame.k))
        start = validate_pba(probs, frame)
        path = pba_path(start, self.terms[target_idx][1], frame)
        cur = s
        for hop in path[1:]:
            nxt, t = self._bridge(cur, hop)
            tb = max_n(t, frame)
            for j in range(2, tb + 1):
                chain.append(window(t, frame, j).chars)
            cur = nxt
        if chain:
            counts = np.zeros(frame.k, dtype=np.int64)
            for c in chain:
                counts += np.bincount(c, minlength=frame.k)
            length = sum(c.size for c in chain)
        else:
            counts = np.zeros(frame.k, dtype=np.int64)
            length = 0
        return cur, chain, counts, length

    def _route_emission(self, s: Block, target_idx: int):
        """Router-planned hop chain: one junction-valid block per hop."""
        frame = self.frame
        state = self._state_of[s.tobytes()]
        path = self.router.route(state, self._term_vidx[target_idx])
        chain = []
        cur = s
        for st in path:
            nxt = self.router.block_of(st)
            t = concat_n(cur, nxt, frame)
            if not verify_connection(cur, nxt, t, frame):
                raise RuntimeError("routed junction failed verification")
            chain.append(nxt.chars)
            self._state_of[nxt.tobytes()] = st
            cur = nxt
        counts = np.zeros(frame.k, dtype=np.int64)
        for c in chain:
            counts += np.bincount(c, minlength=frame.k)
        return cur, chain, counts, sum(c.size for c in chain)

    def _blocks_classic(self) -> Iterator[np.ndarray]:
        m = len(self.terms)
        s_cur = self._start_block(0)
        yield s_cur.chars  # every later piece overlaps the last emitted block
        n = 0
        while True:
            n += 1
            for i in range(m):
                weight, _vertex = self.terms[i]
                reps = int(weight * n) + 1  # floor, >= 1
                for _ in range(1, reps):
                    yield s_cur.chars  # self-repeat: junction is always valid
                if m > 1:
                    arrival, chain, _, _ = self._bridge_emission(
                        s_cur, (i + 1) % m)
                    for c in chain:
                        yield c
                    s_cur = arrival

    def _blocks_balanced(self) -> Iterator[np.ndarray]:
        """Blocks in exact weight proportion, one term visit per block.

        The order of term visits is itself a low-discrepancy stream over
        the decomposition weights, so every prefix holds each vertex's
        block count within one of its expectation and symbol densities
        track the target at rate O(block/length).  A hop chain ends on
        the block of the scheduled vertex (that block *is* the visit);
        chain blocks that land on some other term's composition are
        credited against that term's next scheduled visit.
        """
        frame = self.frame
        k = frame.k
        m = len(self.terms)
        if m == 1:
            s = self._start_block(0)
            while True:
                yield s.chars
        comp_of = {
            tuple(int(p * frame.block) for p in v.probs): i
            for i, (_, v) in enumerate(self.terms)
        }
        sched = (int(x) for ch in
                 lowdisc_stream(Dist.make([w for w, _ in self.terms]))
                 for x in ch)
        # Each scheduled visit emits a run of blocks.  Runs keep the hop
        # rate well under the lightest term weight, so the occasional
        # forced intermediate block (always on some term's composition,
        # by routing preference) is absorbed by the credit bookkeeping
        # without shifting densities.
        run = self.run_length
        cur = next(sched)
        s_cur = self._start_block(cur)
        for _ in range(run):
            yield s_cur.chars
        credit = [0] * m
        hops: dict = {}  # (block bytes, target idx) -> emission
        for j in sched:
            for _ in range(run):
                if credit[j]:
                    credit[j] -= 1
                    continue
                if j == cur:
                    yield s_cur.chars
                    continue
                key = (s_cur.tobytes(), j)
                hop = hops.get(key)
                if hop is None:
                    hop = self._bridge_emission(s_cur, j)
                    hops[key] = hop
                arrival, chain, _, _ = hop
                for c in chain[:-1]:
                    yield c
                    u = comp_of.get(
                        tuple(np.bincount(c, minlength=k).tolist()))
                    if u is not None:
                        credit[u] += 1
                yield chain[-1]
                s_cur = arrival
                cur = j

    def blocks(self) -> Iterator[np.ndarray]:
        """Yield the stream in block units (arrays of 2^M symbol ids)."""
        if self.pacing == "classic":
            return self._blocks_classic()
        return self._blocks_balanced()

    def stream(self, chunk: int = 1 << 16) -> Iterator[np.ndarray]:
        buf = []
        size = 0
        for b in self.blocks():
            buf.append(b)
            size += b.size
            if size >= chunk:
                yield np.concatenate(buf)
                buf, size = [], 0

    def prefix(self, n: int) -> np.ndarray:
        out = []
        size = 0
        for b in self.blocks():
            out.append(b)
            size += b.size
            if size >= n:
                break
        return np.concatenate(out)[:n]


def assemble_2qr(dist: Dist, **kw) -> Assembly2QR:
    return Assembly2QR(dist, **kw)
