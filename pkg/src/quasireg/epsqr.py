"""Colorings with per-symbol gap ratio approaching 1 for spread-out densities.

A *coloring* views a sequence as a partition of 1,2,3,... into per-color
strictly increasing position streams.  The pieces here, bottom up:

* ``compose(f, g, k, l)``: positions of f at the indices given by g; the
  gap-ratio of the composite is at most the product QR_k(f) * QR_l(g)
  whenever g's gaps are at least k/l.
* ``coarse_coloring``: the low-discrepancy stream as a coloring; window
  sums give QR_k <= (k+2)/(k-2) for k >= 3.
* ``block_coloring``: for a near-uniform distribution over n >= 4 symbols,
  snap to the 1/M grid, decompose exactly over the grid boxes, and realize
  each grid distribution as a length-M string via a perfect matching
  between occurrence slots (i, ell), placed near theta_i + ell/l_i on the
  unit circle, and the M cells.  One common phase vector theta serves every
  grid term, and each phase is confined to [delta, 1/(k_i+1) - 2*delta] so
  that slot windows never wrap and lattice residues agree across terms;
  every same-symbol gap then lies within 2*delta*M of a grid period M/l.
* ``sparse_coloring``: when one color carries mass > 1-eps, insert the
  minor colors by earliest-deadline-first over their occurrence intervals
  [floor((n-eps/2)/p_i), ceil((n+eps/2)/p_i)]; gaps stay within
  [(1-eps)/p_i - 2, (1+eps)/p_i + 2].
* ``expanded_sparse``: run the sparse inserter on a c-fold expanded
  distribution and place its output on the multiples of c, dividing every
  minor gap's relative wobble by c at the cost of a structured color 0.
* ``assemble_epsqr``: bucket symbols by dyadic probability ranges, run a
  block coloring per big bucket, interleave buckets by a low-discrepancy
  chooser, and insert small-bucket symbols (if any) via expanded_sparse.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Iterator

import numpy as np

from .seqcore import ContractError, Dist, _as_fraction
from .lowdisc import lowdisc_prefix, lowdisc_stream
from .binary2qr import convex_decompose_box

__all__ = [
    "Coloring",
    "positions_of",
    "compose",
    "coarse_coloring",
    "BlockParams",
    "BlockColoring",
    "block_coloring",
    "sparse_coloring",
    "expanded_sparse",
    "EpsqrAssembly",
    "assemble_epsqr",
]

CHUNK = 1 << 16


class Coloring:
    """A total coloring of 1,2,3,... streamed as chunks of color ids."""

    def __init__(self, k: int, factory: Callable[[], Iterator[np.ndarray]]):
        self.k = k
        self._factory = factory

    def chunks(self) -> Iterator[np.ndarray]:
        return self._factory()

    def prefix(self, n: int) -> np.ndarray:
        out = []
        size = 0
        for ch in self.chunks():
            out.append(ch)
            size += ch.size
            if size >= n:
                break
        if size < n:
            raise ValueError("stream ended before the requested prefix")
        return np.concatenate(out)[:n]


def positions_of(seq, color: int) -> np.ndarray:
    """1-based positions of a color in a materialized prefix."""
    return np.flatnonzero(np.asarray(seq) == color).astype(np.int64) + 1


def compose(f: Iterable[int], g: Iterable[int], k: int, l: int) -> Iterator[int]:
    """Positions f(g(1)), f(g(2)), ...; checks the gap precondition on g.

    f and g are strictly increasing position streams.  Requires
    l*(g(n+1)-g(n)) >= k for all n (error at the offending index).
    """
    if k < 1 or l < 1:
        raise ValueError("k and l must be positive integers")
    fit = iter(f)
    consumed = 0
    last_f = 0
    last_g = None

    def gen():
        nonlocal consumed, last_f, last_g
        for n, gn in enumerate(g, start=1):
            gn = int(gn)
            if last_g is None:
                if gn < 1:
                    raise ValueError("g positions must be >= 1")
            else:
                if gn <= last_g:
                    raise ValueError(f"g not strictly increasing at index {n}")
                if l * (gn - last_g) < k:
                    raise ValueError(f"gap precondition fails at index {n}")
            last_g = gn
            while consumed < gn:
                fv = int(next(fit))
                if fv <= last_f:
                    raise ValueError("f not strictly increasing")
                last_f = fv
                consumed += 1
            yield last_f

    return gen()


def coarse_coloring(p: Dist) -> Coloring:
    """The low-discrepancy stream viewed as a coloring of the positions."""
    return Coloring(p.k, lambda: lowdisc_stream(p, CHUNK))


# ---------------------------------------------------------------------------
# block colorings via circular-interval matchings


def _edf_assign(los: np.ndarray, his: np.ndarray) -> np.ndarray | None:
    """Bijection slots -> cells with cell in [lo, hi] per slot, or None.

    Slot neighborhoods are intervals, so sweeping the cells in order and
    always serving the released slot with the earliest window end finds a
    perfect matching exactly when one exists (the classic exchange
    argument for unit jobs with release times and deadlines).
    Deterministic: ties broken by slot index.
    """
    m = los.size
    order = np.argsort(los, kind="stable")
    match = np.empty(m, dtype=np.int64)  # cell -> slot
    heap: list[tuple[int, int]] = []
    nxt = 0
    for cell in range(m):
        while nxt < m and los[order[nxt]] <= cell:
            s = int(order[nxt])
            heapq.heappush(heap, (int(his[s]), s))
            nxt += 1
        if not heap:
            return None
        hi, s = heapq.heappop(heap)
        if hi < cell:
            return None
        match[cell] = s
    return match


@dataclass
class BlockParams:
    profile: str = "desk"  # "desk" or "theory"
    M: int | None = None
    delta: Fraction | None = None
    seed: object = 0  # int or numpy SeedSequence
    retries: int = 32
    horizon: int = 1 << 21  # positions guaranteed buildable before emission


def _default_scale(profile: str, n: int) -> tuple[int, Fraction]:
    if profile == "desk":
        return n * n, Fraction(1, 4 * n * math.isqrt(n))
    if profile == "theory":
        M = n ** 4
        delta = Fraction(math.sqrt(2.0 * math.log(n) / float(n) ** 7))
        return M, delta
    raise ValueError("profile must be 'desk' or 'theory'")


class BlockColoring(Coloring):
    """Periodic-block coloring for a near-uniform distribution.

    Emits rows of length M; row j realizes the j-th grid distribution of
    the exact decomposition, rows are interleaved by a low-discrepancy
    chooser over the decomposition weights.  All rows share one phase
    vector; failures resample it up to ``retries`` times and then widen the
    matching radius once (wider windows only add slots, so feasibility is
    monotone).  Every same-symbol gap, within or across rows, lies in
    [M/(k_i+1) - 2*delta*M, M/k_i + 2*delta*M].
    """

    def __init__(self, q: Dist, params: BlockParams | None = None):
        params = params or BlockParams()
        n = q.k
        if n < 4:
            raise ValueError("need at least 4 symbols")
        if max(q.probs) > 2 * min(q.probs):
            raise ValueError("distribution not near-uniform (max/min > 2)")
        M, delta = _default_scale(params.profile, n)
        if params.M is not None:
            M = int(params.M)
        cap = Fraction(499, 1000) * min(q.probs)
        if params.delta is not None:
            delta = _as_fraction(params.delta)
        elif params.profile == "desk":
            # radius floor ~ 0.7*sqrt(n)/M: interval systems at density 1
            # stop admitting perfect matchings when windows are narrower
            # than that many cells, independent of how exact the grid is
            need = -(-49 * n // 100)  # ceil(0.49 n), target for (delta*M)^2
            dm = math.isqrt(need)
            if dm * dm < need:
                dm += 1
            floor_ = Fraction(max(4, dm), M)
            delta = min(max(delta, floor_), cap)
        if M < n:
            raise ValueError("cycle length must be at least the bucket size")
        if not (0 < delta < min(q.probs) / 2):
            raise ValueError("matching radius must lie in (0, min q_i / 2)")
        self._delta_cap = cap
        est_edges = M * (2 * float(delta) * M + 1)
        if est_edges > 2e8:
            raise ValueError(
                f"~{est_edges:.2g} matching edges at this scale; "
                "reduce M/delta (the theory profile is not desk-runnable)")
        self.q = q
        self.M = M
        self.delta0 = delta  # as requested; self.delta may be doubled once
        self.delta = delta
        self.grid = [int(p * M) for p in q.probs]  # k_i = floor(q_i * M)
        lo = [Fraction(c, M) for c in self.grid]
        hi = [Fraction(c + 1, M) for c in self.grid]
        terms = convex_decompose_box(q.probs, lo, hi)
        self.alphas = [w for w, _ in terms]
        self.lvecs = []
        for _, vec in terms:
            lv = []
            for v in vec:
                c = v * M
                if c.denominator != 1:
                    raise ContractError("grid decomposition left the lattice")
                lv.append(int(c))
            if sum(lv) != M:
                raise ContractError("grid term does not fill the cycle")
            self.lvecs.append(lv)
        self._lmax = [max(lv[i] for lv in self.lvecs) for i in range(n)]
        self._udist = Dist.make(self.alphas)
        self._rng_seed = params.seed
        self.retries = params.retries
        self.horizon = params.horizon
        self.attempts = 0
        self.doubled = False
        self._rows: dict[int, np.ndarray] = {}
        self.theta: tuple[Fraction, ...] | None = None
        self._emitted = False
        self._settle()
        super().__init__(n, self._chunk_factory)

    # -- construction ------------------------------------------------------

    def _theta_range(self, i: int) -> tuple[int, int, int]:
        """Numerator range and denominator for the i-th phase.

        theta_i roams over [0, 1/lmax_i): one full slot period, so every
        cell residue is reachable.  Windows are clamped to [0, M-1] rather
        than wrapped; a clamped window is a subset of the ideal one, so
        placements still sit within delta*M of their centers and every gap
        certificate is unaffected.
        """
        D = 8 * self.M * (max(self.grid) + 1)
        hi = -(-D // self._lmax[i]) - 1
        if hi < 0:
            raise ValueError("degenerate phase range for this grid")
        return 0, hi, D

    def _sample_theta(self, rng) -> tuple[Fraction, ...]:
        out = []
        for i in range(self.q.k):
            lo, hi, D = self._theta_range(i)
            out.append(Fraction(int(rng.integers(lo, hi + 1)), D))
        return tuple(out)

    def _build_row(self, j: int) -> np.ndarray | None:
        """Match slots of grid term j to cells under the current phases."""
        M = self.M
        n = self.q.k
        lv = self.lvecs[j]
        enum, eden = self.delta.numerator, self.delta.denominator
        los = np.empty(M, dtype=np.int64)
        ws = np.empty(M, dtype=np.int64)
        item = 0
        for i in range(n):
            li = lv[i]
            th = self.theta[i]
            # center(ell) = th + ell/li over denominator v = den(th)*li
            v = th.denominator * li
            start = M * th.numerator * li * eden
            step = M * th.denominator * eden
            half = M * enum * v
            vf = v * eden
            acc = start
            for _ in range(li):
                lo_t = -((-(acc - half)) // vf)
                hi_t = (acc + half) // vf
                if lo_t < 0:
                    lo_t = 0
                if hi_t > M - 1:
                    hi_t = M - 1
                if lo_t > hi_t:
                    return None
                los[item] = lo_t
                ws[item] = hi_t - lo_t + 1
                item += 1
                acc += step
        assert item == M
        his = los + ws - 1
        match = _edf_assign(los, his)
        if match is None:
            return None
        sym_of_item = np.repeat(
            np.arange(n, dtype=np.int32), np.asarray(lv, dtype=np.int64))
        row = sym_of_item[match]
        # slots of each symbol must land in circular order
        cell_of_item = np.empty(M, dtype=np.int64)
        cell_of_item[match] = np.arange(M, dtype=np.int64)
        d = np.diff(cell_of_item)
        bounds = np.cumsum(lv)[:-1] - 1  # last slot index of each symbol
        inner = np.ones(M - 1, dtype=bool)
        inner[bounds] = False
        if not (d[inner] > 0).all():
            return None
        return row

    def _visited_rows(self) -> list[int]:
        nrows = -(-self.horizon // self.M)
        u = lowdisc_prefix(self._udist, nrows)
        return sorted(int(x) for x in np.unique(u))

    def _settle(self) -> None:
        """Fix phases (and radius) so every pre-horizon row matches."""
        rng = np.random.default_rng(self._rng_seed)
        needed = self._visited_rows()
        for widen in range(2):
            if widen:
                wider = min(self.delta0 * 2, self._delta_cap)
                if wider <= self.delta0:
                    break  # already at the radius cap; nothing to widen
                self.delta = wider
                self.doubled = True
            for _ in range(self.retries):
                self.attempts += 1
                self.theta = self._sample_theta(rng)
                rows = {}
                for j in needed:
                    r = self._build_row(j)
                    if r is None:
                        break
                    rows[j] = r
                else:
                    self._rows = rows
                    return
        raise ContractError(
            f"no perfect matching after {self.attempts} phase samples "
            f"(radius widened: {self.doubled})")

    def row(self, j: int) -> np.ndarray:
        r = self._rows.get(j)
        if r is None:
            r = self._build_row(j)
            if r is None:
                raise ContractError(
                    f"grid term {j} unmatched under the settled phases "
                    "(beyond the prepared horizon)")
            self._rows[j] = r
        return r

    # -- emission ----------------------------------------------------------

    def _chunk_factory(self) -> Iterator[np.ndarray]:
        self._emitted = True
        buf: list[np.ndarray] = []
        size = 0
        for u in lowdisc_stream(self._udist, 256):
            for j in u:
                buf.append(self.row(int(j)))
                size += self.M
                if size >= CHUNK:
                    yield np.concatenate(buf).astype(np.int32)
                    buf, size = [], 0

    # -- certificates ------------------------------------------------------

    def gap_bounds(self, sym: int) -> tuple[Fraction, Fraction]:
        """Certified inclusive bounds for every gap of a symbol."""
        ls = {lv[sym] for lv in self.lvecs}
        pad = 2 * self.delta * self.M
        return Fraction(self.M, max(ls)) - pad, Fraction(self.M, min(ls)) + pad

    def report(self) -> dict:
        return {
            "n": self.q.k,
            "M": self.M,
            "delta": str(self.delta),
            "delta_requested": str(self.delta0),
            "terms": len(self.alphas),
            "attempts": self.attempts,
            "radius_widened": self.doubled,
        }


def block_coloring(q: Dist, params: BlockParams | None = None) -> BlockColoring:
    return BlockColoring(q, params)


# ---------------------------------------------------------------------------
# sparse insertion


def sparse_coloring(p: Dist, eps) -> Coloring:
    """Insert minor colors into a dominant color-0 stream by EDF.

    Requires 0 < eps < 1/10 and p_0 >= 1 - eps.  The n-th occurrence of minor
    color i is placed at a position inside
    [floor((n - eps/2)/p_i), ceil((n + eps/2)/p_i)]; a deadline miss is a
    ContractError (interval systems satisfying the preconditions are always
    feasible, so a miss means a bug).
    """
    eps = _as_fraction(eps)
    if not (0 < eps < Fraction(1, 10)):
        raise ValueError("eps must lie in (0, 1/10)")
    if not (p.probs[0] >= 1 - eps):
        raise ValueError("color 0 must carry mass at least 1 - eps")
    k = p.k
    half = eps / 2

    def interval(i: int, n: int) -> tuple[int, int]:
        lo = (n - half) / p.probs[i]
        hi = (n + half) / p.probs[i]
        return (max(1, lo.numerator // lo.denominator),
                -((-hi.numerator) // hi.denominator))

    def factory() -> Iterator[np.ndarray]:
        rel = [0] * k
        dl = [0] * k
        nxt = [1] * k
        for i in range(1, k):
            rel[i], dl[i] = interval(i, 1)
        y = 1
        buf = np.empty(CHUNK, dtype=np.int32)
        fill = 0

        def flush():
            nonlocal fill
            out = buf[:fill].copy()
            fill = 0
            return out

        while True:
            nr = min(rel[i] for i in range(1, k)) if k > 1 else None
            if nr is None:
                buf[fill:] = 0
                fill = CHUNK
                yield flush()
                continue
            if nr > y:
                run = nr - y
                while run:
                    take = min(run, CHUNK - fill)
                    buf[fill:fill + take] = 0
                    fill += take
                    run -= take
                    if fill == CHUNK:
                        yield flush()
                y = nr
            # one position: EDF among released intervals
            best = 0
            bestkey = None
            for i in range(1, k):
                if rel[i] <= y:
                    if dl[i] < y:
                        raise ContractError(
                            f"color {i} missed deadline {dl[i]} at {y}")
                    if bestkey is None or (dl[i], i) < bestkey:
                        bestkey = (dl[i], i)
                        best = i
            if best:
                buf[fill] = best
                fill += 1
                if fill == CHUNK:
                    yield flush()
                nxt[best] += 1
                rel[best], dl[best] = interval(best, nxt[best])
            else:
                buf[fill] = 0
                fill += 1
                if fill == CHUNK:
                    yield flush()
            y += 1

    return Coloring(k, factory)


def expanded_sparse(p: Dist, eps, c: int) -> Coloring:
    """Sparse insertion on a c-fold expanded scale.

    Minor color i receives the positions c*g_i(n) where g is the sparse
    coloring of the expanded distribution (probs multiplied by c); color 0
    takes every non-multiple of c plus the leftover multiples.  Gap-ratio
    contracts: QR_1(f_i) <= 1 + 10*c*eps for minors, QR_c(f_0) <= 1 + 2/c.
    """
    eps = _as_fraction(eps)
    c = int(c)
    if not (1 < c < Fraction(1, 10) / eps):
        raise ValueError("need 1 < c < 1/(10*eps)")
    if not (p.probs[0] >= 1 - eps):
        raise ValueError("color 0 must carry mass at least 1 - eps")
    inner_probs = [1 - c * (1 - p.probs[0])] + [c * q for q in p.probs[1:]]
    inner = sparse_coloring(Dist.make(inner_probs), c * eps)

    def factory() -> Iterator[np.ndarray]:
        for ch in inner.chunks():
            out = np.zeros(ch.size * c, dtype=np.int32)
            out[c - 1:: c] = ch
            yield out

    return Coloring(p.k, factory)


# ---------------------------------------------------------------------------
# assembly


class _Puller:
    """Draw exactly n items at a time from a chunked stream."""

    def __init__(self, it: Iterator[np.ndarray]):
        self._it = it
        self._buf = np.empty(0, dtype=np.int64)

    def take(self, n: int) -> np.ndarray:
        parts = []
        have = 0
        if self._buf.size:
            parts.append(self._buf)
            have = self._buf.size
        while have < n:
            ch = np.asarray(next(self._it))
            parts.append(ch)
            have += ch.size
        flat = np.concatenate(parts) if len(parts) != 1 else parts[0]
        self._buf = flat[n:]
        return flat[:n]


@dataclass
class _Bucket:
    index: int
    symbols: list[int]
    weight: Fraction
    coloring: BlockColoring | None = None


class EpsqrAssembly:
    """Bucketed stream whose per-symbol gap ratios approach 1.

    Symbols are partitioned into dyadic probability buckets
    delta/2^i < p <= delta/2^(i-1).  Buckets with more than N symbols are
    "big": each runs a near-uniform block coloring, and a low-discrepancy
    chooser over bucket weights interleaves them.  The remaining small
    symbols, if any, must be light enough for the expanded sparse inserter
    (knobs eps_small / c_small), which owns the outermost layer.
    """

    def __init__(self, dist: Dist, eps, *, delta=None, N: int = 64,
                 profile: str = "desk", seed: int = 0,
                 eps_small=None, c_small: int | None = None,
                 M: int | None = None, delta_match=None,
                 horizon: int = 1 << 21):
        self.dist = dist
        self.eps = _as_fraction(eps)
        if not (0 < self.eps < 1):
            raise ValueError("eps must lie in (0, 1)")
        self.delta = _as_fraction(delta) if delta is not None else max(dist.probs)
        if max(dist.probs) > self.delta:
            raise ValueError("every probability must be at most delta")
        self.N = int(N)
        self.profile = profile
        self.seed = seed
        self.horizon = int(horizon)

        buckets: dict[int, list[int]] = {}
        for s, prob in enumerate(dist.probs):
            i = 1
            while prob <= self.delta / (1 << i):
                i += 1
            buckets.setdefault(i, []).append(s)
        self.bucket_symbols = dict(sorted(buckets.items()))
        self.I = sorted(i for i, ss in buckets.items() if len(ss) > self.N)
        self.J = sorted(i for i, ss in buckets.items() if len(ss) <= self.N)
        if not self.I:
            raise ValueError(
                "no bucket exceeds N symbols; this construction needs at "
                "least one big bucket (raise N only with care)")

        ss = np.random.SeedSequence(seed)
        child_seeds = ss.spawn(len(self.I))
        self.big: list[_Bucket] = []
        total_big = Fraction(0)
        for idx, i in enumerate(self.I):
            syms = self.bucket_symbols[i]
            w = sum(dist.probs[s] for s in syms)
            total_big += w
            self.big.append(_Bucket(i, syms, w))
        self.big_weight = total_big
        for idx, b in enumerate(self.big):
            local = Dist.make([dist.probs[s] / b.weight for s in b.symbols])
            share = b.weight / total_big
            hor = int(self.horizon * float(share) * 1.25) + 4 * len(b.symbols) ** 2
            params = BlockParams(profile=profile, M=M, delta=delta_match,
                                 seed=child_seeds[idx], horizon=hor)
            b.coloring = BlockColoring(local, params)

        self.h_dist = Dist.make([b.weight / total_big for b in self.big])

        self.small_symbols = [s for i in self.J for s in self.bucket_symbols[i]]
        self.outer: Coloring | None = None
        self.c_small = None
        self.eps_small = None
        if self.small_symbols:
            small_mass = sum(dist.probs[s] for s in self.small_symbols)
            e_s = _as_fraction(eps_small) if eps_small is not None \
                else self.eps * self.eps / 1000
            c_s = int(c_small) if c_small is not None \
                else int(-(-10 * self.eps.denominator // self.eps.numerator))
            if not (0 < e_s < Fraction(1, 10)):
                raise ValueError("eps_small must lie in (0, 1/10)")
            if not (1 < c_s < Fraction(1, 10) / e_s):
                raise ValueError(
                    f"inconsistent knobs: need 1 < c_small < 1/(10*eps_small); "
                    f"got c_small={c_s}, eps_small={e_s}")
            if not (small_mass < e_s):
                raise ValueError(
                    f"small-bucket mass {small_mass} is not below "
                    f"eps_small={e_s}; raise eps_small or N")
            outer_probs = [1 - small_mass] + [dist.probs[s] for s in self.small_symbols]
            self.outer = expanded_sparse(Dist.make(outer_probs), e_s, c_s)
            self.c_small, self.eps_small = c_s, e_s

    # -- streaming ---------------------------------------------------------

    def chunks(self) -> Iterator[np.ndarray]:
        big_maps = [np.asarray(b.symbols, dtype=np.int32) for b in self.big]
        nbig = len(self.big)
        bucket_pull = [_Puller(b.coloring.chunks()) for b in self.big]
        if self.outer is None and nbig == 1:
            m = big_maps[0]
            for ch in self.big[0].coloring.chunks():
                yield m[ch]
            return
        h_pull = _Puller(lowdisc_stream(self.h_dist, CHUNK)) if nbig > 1 else None
        small_map = np.asarray([0] + self.small_symbols, dtype=np.int32)

        def fill_big(count: int) -> np.ndarray:
            if h_pull is None:
                hids = np.zeros(count, dtype=np.int64)
            else:
                hids = h_pull.take(count)
            out = np.empty(count, dtype=np.int32)
            for bi in range(nbig):
                sel = hids == bi
                cnt = int(sel.sum())
                if cnt:
                    out[sel] = big_maps[bi][bucket_pull[bi].take(cnt)]
            return out

        if self.outer is None:
            while True:
                yield fill_big(CHUNK)
        else:
            for oc in self.outer.chunks():
                out = np.empty(oc.size, dtype=np.int32)
                minor = oc > 0
                if minor.any():
                    out[minor] = small_map[oc[minor]]
                bigpos = ~minor
                cnt = int(bigpos.sum())
                if cnt:
                    out[bigpos] = fill_big(cnt)
                yield out

    def prefix(self, n: int) -> np.ndarray:
        out = []
        size = 0
        for ch in self.chunks():
            out.append(ch)
            size += ch.size
            if size >= n:
                break
        return np.concatenate(out)[:n]

    def stream(self, chunk: int = CHUNK) -> Iterator[np.ndarray]:
        return self.chunks()

    def report(self) -> dict:
        return {
            "eps": str(self.eps),
            "delta": str(self.delta),
            "N": self.N,
            "profile": self.profile,
            "buckets": {i: len(ss) for i, ss in self.bucket_symbols.items()},
            "big": [b.index for b in self.big],
            "small": self.J,
            "small_knobs": {"eps_small": str(self.eps_small),
                            "c_small": self.c_small} if self.outer else None,
            "block": {b.index: b.coloring.report() for b in self.big},
        }


def assemble_epsqr(dist: Dist, eps, **knobs) -> EpsqrAssembly:
    return EpsqrAssembly(dist, eps, **knobs)
