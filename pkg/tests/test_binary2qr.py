"""Dyadic block assembly: vertices, uniform blocks, bridges, gap windows."""

from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quasireg import (Assembly2QR, ConnectError, Dist, assemble_2qr, connect,
                      frame_of, gap_stats, huffman_uniform, pba_decompose,
                      pba_enumerate, pba_path, pba_step, qr_observed,
                      verify_connection, verify_uniform)
from quasireg.binary2qr import (Block, block_from_chars, block_gaps,
                                blocks_equal, concat_n, convex_decompose_box,
                                diamond_n, max_n, pba_adjacent, pba_box,
                                translate, union, validate_pba,
                                verify_compatible, window)

from oracles import convex_reconstruct


HALF_THIRD_SIXTH = Dist.make(["1/2", "1/3", "1/6"])


def random_dist(rng, kmax=4, max_den=64):
    k = int(rng.integers(2, kmax + 1))
    den = int(rng.integers(max(k, 2), max_den + 1))
    cuts = sorted(rng.choice(np.arange(1, den), size=k - 1, replace=False).tolist())
    parts = np.diff([0] + cuts + [den]).tolist()
    return Dist.make([F(int(a), den) for a in parts])


# ---------------------------------------------------------------------------
# frames and vertices


def test_frame_of_half_third_sixth():
    fr = frame_of(HALF_THIRD_SIXTH)
    assert fr.exponents == (1, 2, 3)
    assert fr.M == 8
    assert fr.block == 256


def test_frame_powers_of_two_take_smaller_exponent():
    fr = frame_of(Dist.make(["1/4", "1/4", "1/2"]))
    assert fr.exponents == (2, 2, 1)


def test_pba_box_endpoints():
    fr = frame_of(HALF_THIRD_SIXTH)
    lo, hi = pba_box(fr)
    assert lo == (F(1, 2), F(1, 4), F(1, 8))
    assert hi == (F(1), F(1, 2), F(1, 4))


def test_validate_pba_accepts_one_interior():
    fr = frame_of(HALF_THIRD_SIXTH)
    p = validate_pba((F(1, 2), F(3, 8), F(1, 8)), fr)
    assert p.irr == 1  # only 3/8 is strictly inside its interval


def test_validate_pba_rejects_point_off_the_vertex_set():
    # (1/2, 1/3, 1/6) itself has two interior coordinates (1/3 and 1/6)
    fr = frame_of(HALF_THIRD_SIXTH)
    with pytest.raises(ValueError):
        validate_pba((F(1, 2), F(1, 3), F(1, 6)), fr)


def test_validate_pba_rejects_two_interiors():
    fr = frame_of(HALF_THIRD_SIXTH)
    with pytest.raises(ValueError):
        validate_pba((F(7, 12), F(1, 4), F(1, 6)), fr)


def test_pba_enumerate_small_frame():
    fr = frame_of(HALF_THIRD_SIXTH)
    vs = pba_enumerate(fr)
    assert len(vs) == 3
    assert all(sum(v.probs) == 1 for v in vs)
    assert len({v.probs for v in vs}) == len(vs)


def test_convex_decompose_box_reconstructs():
    fr = frame_of(HALF_THIRD_SIXTH)
    lo, hi = pba_box(fr)
    terms = convex_decompose_box(HALF_THIRD_SIXTH.probs, lo, hi)
    assert sum(w for w, _ in terms) == 1
    assert convex_reconstruct(terms) == list(HALF_THIRD_SIXTH.probs)


def test_pba_decompose_random_corpus_exact():
    rng = np.random.default_rng(99)
    for _ in range(25):
        d = random_dist(rng)
        fr = frame_of(d)
        terms = pba_decompose(d, fr)
        assert sum(w for w, _ in terms) == 1
        got = convex_reconstruct([(w, v.probs) for w, v in terms])
        assert got == list(d.probs)
        for w, v in terms:
            assert w > 0
            validate_pba(v.probs, fr)  # raises if not a vertex


def test_pba_step_chain_reaches_target_within_vertex_count():
    fr = frame_of(HALF_THIRD_SIXTH)
    vs = pba_enumerate(fr)
    for a in vs:
        for b in vs:
            if a.probs == b.probs:
                continue
            path = pba_path(a, b, fr)
            assert path[0].probs == a.probs and path[-1].probs == b.probs
            assert len(path) - 1 <= len(vs)
            for u, v in zip(path, path[1:]):
                assert pba_adjacent(u, v)


def test_pba_step_rejects_no_op():
    fr = frame_of(HALF_THIRD_SIXTH)
    v = pba_enumerate(fr)[0]
    with pytest.raises(ValueError):
        pba_step(v, v, fr)


# ---------------------------------------------------------------------------
# block operations


def test_block_basicness():
    b = block_from_chars([0, 1, 0, 2])
    assert len(b) == 4
    assert b.span() == (1, 4)
    assert b.symbols() == {0, 1, 2}


def test_translate_guard():
    b = block_from_chars([0, 1])
    with pytest.raises(ValueError):
        translate(b, -1)
    assert translate(b, 3).span() == (4, 5)


def test_union_rejects_overlap():
    a = block_from_chars([0, 1])          # positions 1,2
    c = block_from_chars([1, 0], offset=1)  # positions 2,3
    with pytest.raises(ValueError):
        union(a, c)


def test_concat_window_roundtrip():
    fr = frame_of(Dist.make(["1/2", "1/2"]))  # M = 6, block 64
    blk = fr.block
    a = block_from_chars(np.arange(blk) % 2)
    c = block_from_chars((np.arange(blk) + 1) % 2)
    glued = concat_n(a, c, fr)
    assert max_n(glued, fr) == 2
    assert blocks_equal(window(glued, fr, 1), a)
    assert blocks_equal(window(glued, fr, 2), c)
    assert blocks_equal(window(glued, fr, -1), c)


def test_diamond_overlap_glue():
    fr = frame_of(Dist.make(["1/2", "1/2"]))
    blk = fr.block
    a = block_from_chars(np.arange(blk) % 2)
    c = block_from_chars((np.arange(blk) + 1) % 2)
    ac = concat_n(a, c, fr)
    t = concat_n(c, a, fr)
    glued = diamond_n(ac, t, fr)  # last window of ac is c == first of t
    assert max_n(glued, fr) == 3
    assert blocks_equal(window(glued, fr, 2), c)
    assert blocks_equal(window(glued, fr, 3), a)
    with pytest.raises(ValueError):
        diamond_n(ac, ac, fr)  # c != a: overlap disagrees


def test_block_gaps_counts_boundary_runs():
    # symbol 1 at positions 2 and 5 within span [1, 6]
    b = block_from_chars([0, 1, 0, 0, 1, 0])
    mn, mx = block_gaps(b)[1]
    assert mn == 3 and mx == 3
    # symbol absent from the ends: boundary stretch counts in max_gap
    b2 = block_from_chars([0, 0, 1, 0, 0, 0, 0])
    mn2, mx2 = block_gaps(b2)[1]
    assert mn2 is None and mx2 == 4  # 4 = distance from pos 3 to the end (7)


# ---------------------------------------------------------------------------
# uniform blocks and bridges


def test_huffman_uniform_blocks_verify():
    for probs in (["1/2", "1/3", "1/6"], ["1/2", "1/4", "1/4"], ["2/3", "1/3"]):
        d = Dist.make(probs)
        fr = frame_of(d)
        for v in pba_enumerate(fr):
            s = huffman_uniform(fr, v)
            assert len(s) == fr.block
            assert verify_uniform(s, fr, v)
            assert verify_compatible(s, fr)


def test_verify_uniform_rejects_wrong_target():
    fr = frame_of(HALF_THIRD_SIXTH)
    vs = pba_enumerate(fr)
    distinct = [(a, b) for a in vs for b in vs
                if a.probs != b.probs]
    a, b = distinct[0]
    s = huffman_uniform(fr, a)
    assert not verify_uniform(s, fr, b)


def test_connect_all_vertex_pairs_small_frame():
    fr = frame_of(HALF_THIRD_SIXTH)
    vs = pba_enumerate(fr)
    for a in vs:
        sa = huffman_uniform(fr, a)
        for b in vs:
            s2, t = connect(sa, b, fr)
            assert verify_connection(sa, s2, t, fr)
            assert verify_uniform(s2, fr, b)


def test_connect_requires_full_source_block():
    d = Dist.make(["1/2", "1/4", "1/4"])
    fr = frame_of(d)
    v = pba_enumerate(fr)[0]
    with pytest.raises(ValueError):
        connect(block_from_chars([0, 1]), v, fr)


# ---------------------------------------------------------------------------
# assembly


def _qr_and_density(dist, n, pacing="balanced"):
    asm = assemble_2qr(dist, pacing=pacing)
    got = []
    size = 0
    for ch in asm.stream(1 << 14):
        got.append(ch)
        size += ch.size
        if size >= n:
            break
    seq = np.concatenate(got)[:n]
    gs = gap_stats(seq)
    dens = {s: F(int((seq == s).sum()), n) for s in range(dist.k)}
    return qr_observed(gs), dens, gs


@pytest.mark.parametrize("probs", [
    ["1/2", "1/3", "1/6"],
    ["1/2", "1/4", "1/4"],
    ["5/12", "4/12", "3/12"],
    ["23/64", "20/64", "13/64", "8/64"],
])
def test_assembly_gap_ratio_at_most_two(probs):
    d = Dist.make(probs)
    qr, dens, gs = _qr_and_density(d, 30_000)
    assert qr <= 2
    for s, p in enumerate(d.probs):
        assert abs(dens[s] - p) < F(1, 50)


def test_assembly_gaps_inside_dyadic_windows():
    d = HALF_THIRD_SIXTH
    fr = frame_of(d)
    _, _, gs = _qr_and_density(d, 30_000)
    for s, g in gs.per.items():
        e = fr.exponents[s]
        assert g.min_gap >= 1 << (e - 1)
        assert g.max_gap <= 1 << e


def test_classic_pacing_also_within_windows():
    d = HALF_THIRD_SIXTH
    fr = frame_of(d)
    qr, _, gs = _qr_and_density(d, 30_000, pacing="classic")
    assert qr <= 2
    for s, g in gs.per.items():
        e = fr.exponents[s]
        assert g.min_gap >= 1 << (e - 1)
        assert g.max_gap <= 1 << e


def test_assembly_rejects_oversized_denominators():
    # probabilities ~ 2^-10 push the block scale over the default cap
    probs = [F(1, 1024)] * 512 + [F(1, 2)]
    with pytest.raises(ValueError):
        Assembly2QR(Dist.make(probs), max_M=9)


def test_assembly_deterministic():
    d = Dist.make(["5/12", "4/12", "3/12"])
    a = next(assemble_2qr(d).stream(1 << 12))
    b = next(assemble_2qr(d).stream(1 << 12))
    assert np.array_equal(a, b)
