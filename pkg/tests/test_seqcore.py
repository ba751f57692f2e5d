"""Core statistics: exactness against brute-force references."""

from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quasireg import (ContractError, Dist, StreamAnalyzer, check_min_gap_bound,
                      discrepancy, empirical_density, gap_stats, qr_k,
                      qr_observed)
from quasireg.seqcore import as_positions, stale_symbols

from oracles import (brute_discrepancy, brute_gaps, brute_qr, brute_qr_all,
                     brute_qr_k, chunked)


# ---------------------------------------------------------------------------
# Dist


def test_dist_make_and_lookup():
    d = Dist.make(["1/2", "1/3", "1/6"], names=["a", "b", "c"])
    assert d.probs == (F(1, 2), F(1, 3), F(1, 6))
    assert d.k == 3
    assert d.name_of(1) == "b"
    assert d.id_of("c") == 2


def test_dist_nameless_fallback():
    d = Dist.make([F(1, 2), F(1, 2)])
    assert d.name_of(0) == "0"
    assert d.id_of("1") == 1


@pytest.mark.parametrize("probs", [
    [],
    ["1/2", "1/3"],          # does not sum to 1
    ["1/2", "1/2", "0"],     # zero probability
    ["3/2", "-1/2"],         # negative
])
def test_dist_rejects_bad_probs(probs):
    with pytest.raises(ValueError):
        Dist.make(probs)


def test_dist_rejects_duplicate_names():
    with pytest.raises(ValueError):
        Dist.make(["1/2", "1/2"], names=["x", "x"])


# ---------------------------------------------------------------------------
# gap stats / QR


def test_gap_stats_small_example():
    # symbol 0 at 1,2,4,6; symbol 1 at 3,5
    gs = gap_stats([0, 0, 1, 0, 1, 0])
    g0 = gs.per[0]
    assert (g0.first, g0.last, g0.count) == (1, 6, 4)
    assert (g0.min_gap, g0.max_gap) == (1, 2)
    g1 = gs.per[1]
    assert (g1.min_gap, g1.max_gap) == (2, 2)
    assert qr_observed(gs) == F(2)


def test_single_occurrence_counts_as_one():
    gs = gap_stats([0, 1, 0])
    assert gs.per[1].min_gap is None
    assert qr_observed(gs) == F(1)  # symbol 1 contributes nothing


@settings(max_examples=60)
@given(st.lists(st.integers(0, 4), min_size=1, max_size=300))
def test_gap_stats_matches_brute(seq):
    gs = gap_stats(seq)
    for s in set(seq):
        gaps = brute_gaps(seq, s)
        g = gs.per[s]
        if gaps:
            assert (g.min_gap, g.max_gap) == (min(gaps), max(gaps))
        else:
            assert g.min_gap is None
        assert qr_observed(gs) == brute_qr_all(seq)


def test_qr_k_alternating_gaps_window_ratio():
    # gaps alternate 1,2: positions 1,2,4,5,7,8,...
    pos = np.cumsum([1] + [1, 2] * 30)
    assert qr_k(pos, 1) == F(2)
    # windows of >= 2 steps: best 2-step span 5/4 of the worst per step
    assert qr_k(pos, 2) == F(5, 4)


@settings(max_examples=60)
@given(st.lists(st.integers(1, 6), min_size=6, max_size=40),
       st.integers(1, 4))
def test_qr_k_matches_brute(gaps, k):
    pos = np.cumsum([1] + gaps)
    assert qr_k(pos, k) == brute_qr_k(pos.tolist(), k)


def test_qr_k_monotone_in_k():
    rng = np.random.default_rng(5)
    pos = np.cumsum(rng.integers(1, 9, size=120)) + 1
    vals = [qr_k(pos, k) for k in range(1, 6)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))


def test_position_validation():
    with pytest.raises(ValueError):
        as_positions([3, 2, 5])
    with pytest.raises(ValueError):
        as_positions([0, 1])
    with pytest.raises(ValueError):
        qr_k([1, 2, 3], 0)
    with pytest.raises(ValueError):
        qr_k([1, 2], 2)


# ---------------------------------------------------------------------------
# discrepancy / density


def test_discrepancy_alternating():
    d = Dist.make(["1/2", "1/2"])
    overall, per = discrepancy([0, 1, 0, 1, 0, 1], d)
    assert overall == F(1, 2)
    assert per[0] == per[1] == F(1, 2)


@settings(max_examples=40)
@given(st.lists(st.integers(0, 2), min_size=1, max_size=120))
def test_discrepancy_matches_brute(seq):
    d = Dist.make(["1/2", "1/3", "1/6"])
    assert discrepancy(seq, d)[0] == brute_discrepancy(seq, d.probs)


def test_empirical_density_exact():
    dens = empirical_density([0, 0, 1, 2, 0])
    assert dens == {0: F(3, 5), 1: F(1, 5), 2: F(1, 5)}


def test_check_min_gap_bound():
    # perfectly regular with density 1/4: min gap 4 >= 1/(1/4 * 1) = 4
    assert check_min_gap_bound([4, 8, 12, 16], F(1, 4))
    # gaps {1, 8} (ratio 8) with claimed density 1/100: bound 12.5 > 1
    assert not check_min_gap_bound([1, 2, 10], F(1, 100))


def test_stale_symbols():
    gs = gap_stats([0, 1, 0, 1] + [1] * 20)
    assert stale_symbols(gs) == [0]


# ---------------------------------------------------------------------------
# streaming analyzer


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 2), min_size=1, max_size=600),
       st.integers(0, 2**32 - 1))
def test_stream_analyzer_equals_batch(seq, seed):
    d = Dist.make(["1/2", "1/3", "1/6"])
    an = StreamAnalyzer(d)
    rng = np.random.default_rng(seed)
    for ch in chunked(np.asarray(seq), rng, lo=1, hi=50):
        an.update(ch)
    gs_ref = gap_stats(seq)
    gs = an.gap_statistics()
    assert gs.length == gs_ref.length
    for s in set(seq):
        a, b = gs.per[s], gs_ref.per[s]
        assert (a.first, a.last, a.count, a.min_gap, a.max_gap) == \
               (b.first, b.last, b.count, b.min_gap, b.max_gap)
    assert an.max_discrepancy() == discrepancy(seq, d)[0]


def test_stream_analyzer_density_errors():
    d = Dist.make(["1/2", "1/2"])
    an = StreamAnalyzer(d)
    an.update(np.array([0, 1, 0, 0]))
    errs = an.density_errors()
    assert errs[0] == F(3, 4) - F(1, 2)
    assert errs[1] == F(1, 2) - F(1, 4)


def test_stream_analyzer_rejects_foreign_symbols():
    an = StreamAnalyzer(Dist.make(["1/2", "1/2"]))
    with pytest.raises(ValueError):
        an.update(np.array([0, 2]))


def test_contract_error_is_runtime_error():
    assert issubclass(ContractError, RuntimeError)
