"""Deadline-driven low-discrepancy streams: exact bounds and determinism."""

from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quasireg import Dist, discrepancy, lowdisc_prefix, lowdisc_stream
from quasireg.lowdisc import (LowDiscState, lowdisc_next,
                              lowdisc_window_check, window_counts)


def random_dist(rng, k=None, max_den=60):
    """Random rational distribution on a common denominator."""
    k = k or int(rng.integers(2, 9))
    den = int(rng.integers(max(k, 2), max_den + 1))
    cuts = sorted(rng.choice(np.arange(1, den), size=k - 1, replace=False).tolist())
    parts = np.diff([0] + cuts + [den]).tolist()
    return Dist.make([F(int(a), den) for a in parts])


def test_two_thirds_one_third_prefix():
    d = Dist.make(["2/3", "1/3"])
    assert lowdisc_prefix(d, 6).tolist() == [0, 0, 1, 0, 0, 1]


def test_halves_alternate_starting_with_symbol_zero():
    d = Dist.make(["1/2", "1/2"])
    assert lowdisc_prefix(d, 8).tolist() == [0, 1] * 4


def test_uniform_three_cycles():
    d = Dist.make(["1/3", "1/3", "1/3"])
    assert lowdisc_prefix(d, 9).tolist() == [0, 1, 2] * 3


def test_three_symbol_discrepancy_at_ten_thousand():
    d = Dist.make(["1/2", "1/3", "1/6"])
    pre = lowdisc_prefix(d, 10_000)
    assert discrepancy(pre, d)[0] == F(5, 6)


def test_prefix_discrepancy_at_most_one_exact():
    rng = np.random.default_rng(20260813)
    for _ in range(25):
        d = random_dist(rng)
        pre = lowdisc_prefix(d, 2000)
        assert discrepancy(pre, d)[0] <= 1


def test_window_deviation_below_two():
    rng = np.random.default_rng(7)
    d = Dist.make(["1/2", "1/3", "1/6"])
    pre = lowdisc_prefix(d, 5000)
    cum = window_counts(pre, d)
    starts = rng.integers(1, 4001, size=300)
    lengths = rng.integers(1, 1000, size=300)
    assert lowdisc_window_check(pre, d, starts, lengths, cum=cum)


def test_pure_python_stepper_matches_kernel():
    d = Dist.make(["5/12", "4/12", "3/12"])
    st_ = LowDiscState.fresh(d)
    seq = [lowdisc_next(st_) for _ in range(500)]
    assert seq == lowdisc_prefix(d, 500).tolist()


def test_stream_concatenation_equals_prefix():
    d = Dist.make(["3/7", "2/7", "2/7"])
    got = []
    for ch in lowdisc_stream(d, chunk=64):
        got.extend(ch.tolist())
        if len(got) >= 1000:
            break
    assert got[:1000] == lowdisc_prefix(d, 1000).tolist()


def test_deterministic():
    d = Dist.make(["1/5", "2/5", "2/5"])
    assert lowdisc_prefix(d, 3000).tolist() == lowdisc_prefix(d, 3000).tolist()


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_property_prefix_discrepancy(seed):
    rng = np.random.default_rng(seed)
    d = random_dist(rng, max_den=36)
    pre = lowdisc_prefix(d, 600)
    assert discrepancy(pre, d)[0] <= 1


def test_every_symbol_appears_in_proportion():
    d = Dist.make(["1/2", "1/4", "1/4"])
    pre = lowdisc_prefix(d, 4000)
    counts = np.bincount(pre, minlength=3)
    for s, p in enumerate(d.probs):
        assert abs(int(counts[s]) - 4000 * p) <= 1
