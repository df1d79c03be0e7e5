import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from freetransport import fock
from freetransport.series import WordSeries, enumerate_loops, involution, random_loop, random_series
from freetransport.temperley_lieb import (catalan, enumerate_pairings, is_noncrossing,
                                          pairing_moment, pairing_moment_enumerated, total_trace,
                                          trace_k, v0)


@pytest.mark.parametrize("n, count", [(0, 1), (1, 1), (2, 2), (3, 5), (4, 14), (6, 132), (8, 1430)])
def test_pairing_counts(n, count):
    pairings = enumerate_pairings(n)
    assert len(pairings) == count == catalan(n)
    assert len(set(pairings)) == count
    for p in pairings:
        assert is_noncrossing(p)
        assert sorted(i for pair in p for i in pair) == list(range(2 * n))


def test_crossing_detected():
    assert not is_noncrossing(((0, 2), (1, 3)))
    assert is_noncrossing(((0, 3), (1, 2)))


def test_frozen_moments(a3):
    assert pairing_moment((0, 1), a3) == pytest.approx(2 ** 0.25, abs=1e-15)
    assert pairing_moment((0, 1, 0, 1), a3) == pytest.approx(1 + math.sqrt(2), abs=1e-14)
    assert pairing_moment((), a3) == 1.0
    assert pairing_moment((0, 1, 0), a3) == 0.0
    assert pairing_moment((0, 3), a3) == 0.0  # e1 then e2~ is not a loop


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["A3", "A4", "D4"]), st.sampled_from([2, 4, 6, 8]))
def test_interval_recursion_matches_enumeration(pds, seed, name, length):
    pd = pds[name]
    w = random_loop(pd.graph, length, np.random.default_rng(seed))
    assert pairing_moment(w, pd) == pytest.approx(pairing_moment_enumerated(w, pd), abs=1e-12)


def test_v0_is_self_adjoint_and_frozen(a3):
    x = v0(a3)
    assert involution(x, a3.graph).distance(x) < 1e-15
    assert x.coeff((0, 1)) == pytest.approx(0.5 * 2 ** 0.25)
    assert x.coeff((1, 0)) == pytest.approx(0.5 * 2 ** -0.25)
    # each e e° contributes sigma(e)/2 * sigma(e)
    assert fock.state(x, a3) == pytest.approx(1.5 * math.sqrt(2), abs=1e-14)


def test_trace_zero_frozen(a3):
    tr = trace_k(WordSeries({(0, 1): 1.0}), a3)
    assert tr[0] == pytest.approx(2 ** 0.25)
    assert tr[1] == 0 and tr[2] == 0


def test_trace_zero_is_vacuum_state_on_loops(a4):
    for length in (2, 4, 6):
        for w in enumerate_loops(a4.graph, length):
            x = WordSeries({w: 1.0})
            assert total_trace(x, a4) == pytest.approx(fock.state(x, a4), abs=1e-12)


@pytest.mark.parametrize("k", [1, 2])
def test_graded_trace_sums_to_phi_k(pds, rng, k):
    for name in ("A3", "A4"):
        pd = pds[name]
        for _ in range(10):
            x = WordSeries(random_series(pd.graph, [2 * k, 2 * k + 2], 4, rng).terms, k=k)
            assert total_trace(x, pd) == pytest.approx(fock.phi_k(x, pd), abs=1e-12)
