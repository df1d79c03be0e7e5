import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from freetransport import fock
from freetransport.series import (WordSeries, enumerate_loops, enumerate_paths, random_loop,
                                  random_series, unit_k, wedge_k)
from freetransport.temperley_lieb import pairing_moment


class DenseFock:
    """Orthonormal-basis matrices of the circular operators on words of length <= L."""

    def __init__(self, pd, L):
        n = pd.graph.n_edges
        self.words = [w for m in range(L + 1) for w in itertools.product(range(n), repeat=m)]
        index = {w: i for i, w in enumerate(self.words)}
        dim = len(self.words)
        self.c = []
        lmat = []
        for e in range(n):
            M = np.zeros((dim, dim))
            for w, i in index.items():
                j = index.get((e,) + w)
                if j is not None:
                    # |e w| / |w| = sigma(e)^(-1/2)
                    M[j, i] = pd.sigma[e] ** -0.5
            lmat.append(M)
        for e in range(n):
            self.c.append(lmat[e] + lmat[pd.graph.opp[e]].T)

    def moment(self, word):
        v = np.zeros(len(self.words))
        v[0] = 1.0
        for e in reversed(word):
            v = self.c[e] @ v
        return v[0]


@pytest.mark.parametrize("name", ["A3", "A4"])
def test_vacuum_moments_match_dense_operators(pds, name):
    pd = pds[name]
    dense = DenseFock(pd, 4)
    for length in (2, 4, 6, 8):
        loops = enumerate_loops(pd.graph, length)
        for w in loops[:: max(1, len(loops) // 60)]:
            assert fock.vacuum_moment(w, pd) == pytest.approx(dense.moment(w), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["A3", "A4", "A5", "D4"]), st.sampled_from([2, 4, 6, 8, 10]))
def test_vacuum_moment_equals_pairing_sum(pds, seed, name, length):
    pd = pds[name]
    w = random_loop(pd.graph, length, np.random.default_rng(seed))
    assert fock.vacuum_moment(w, pd) == pytest.approx(pairing_moment(w, pd), abs=1e-10)


def test_non_loops_and_odd_words_vanish(a3):
    assert fock.vacuum_moment((0, 1, 0), a3) == 0.0
    assert fock.vacuum_moment((0, 3), a3) == 0.0


def test_frozen_operator_examples(a3):
    out = fock.apply_l_star(0, fock.FockVector.basis((0, 1)), a3)
    assert out.terms.keys() == {(1,)}
    assert out.coeff((1,)) == pytest.approx(2 ** -0.25)
    assert fock.vacuum_moment((0, 1), a3) == pytest.approx(2 ** 0.25)
    assert fock.vacuum_moment((0, 1, 0, 1), a3) == pytest.approx(1 + 2 ** 0.5)
    assert fock.phi_v((0, 1), 0, a3) == pytest.approx(2 ** 0.25)


def test_length_limit_is_enforced(a3):
    with pytest.raises(ValueError, match="length limit"):
        fock.vacuum_moment((0, 1) * 9, a3)
    assert fock.vacuum_moment((0, 1) * 9, a3, max_length=18) == pytest.approx(pairing_moment((0, 1) * 9, a3))


def test_phi_v_matches_vacuum_moment_at_base(a4):
    g = a4.graph
    for w in enumerate_loops(g, 4):
        v = g.src[w[0]]
        assert fock.phi_v(w, v, a4) == pytest.approx(fock.vacuum_moment(w, a4), abs=1e-12)
        other = (v + 1) % g.n_vertices
        assert fock.phi_v(w, other, a4) == 0


def test_wedge_frozen_example(a3):
    x = WordSeries({(1, 0): 1.0}, k=1)
    y = wedge_k(x, x, a3)
    assert y.terms.keys() == {(1, 0)}
    assert y.coeff((1, 0)) == pytest.approx(2 ** -0.25)


@pytest.mark.parametrize("k", [1, 2])
def test_unit_is_neutral(pds, rng, k):
    for name in ("A3", "A4"):
        pd = pds[name]
        u = unit_k(k, pd)
        for _ in range(10):
            x = WordSeries(random_series(pd.graph, [2 * k, 2 * k + 2], 3, rng).terms, k=k)
            assert wedge_k(x, u, pd).distance(x) < 1e-12
            assert wedge_k(u, x, pd).distance(x) < 1e-12


def _random_vector(pd, k, rng):
    terms = {}
    for length in range(k, k + 4):
        paths = enumerate_paths(pd.graph, length)
        terms[paths[int(rng.integers(len(paths)))]] = complex(rng.normal(), rng.normal())
    return fock.FockVector(terms)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1, 2]))
def test_graded_operators_are_multiplicative(pds, seed, k):
    pd = pds["A4"]
    rng = np.random.default_rng(seed)
    x = WordSeries(random_series(pd.graph, [2 * k, 2 * k + 2], 3, rng).terms, k=k)
    y = WordSeries(random_series(pd.graph, [2 * k, 2 * k + 2], 3, rng).terms, k=k)
    vec = _random_vector(pd, k, rng)
    lhs = fock.c_k_apply(wedge_k(x, y, pd), vec, pd)
    rhs = fock.c_k_apply(x, fock.c_k_apply(y, vec, pd), pd)
    assert lhs.distance(rhs) < 1e-10


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1, 2]), st.sampled_from(["A3", "A4", "D4"]))
def test_inclusion_preserves_states(pds, seed, k, name):
    pd = pds[name]
    rng = np.random.default_rng(seed)
    x = WordSeries(random_series(pd.graph, [2 * (k - 1), 2 * k], 3, rng).terms, k=k - 1)
    assert fock.phi_k(fock.include(x, pd), pd) == pytest.approx(fock.phi_k(x, pd), abs=1e-10)


@pytest.mark.parametrize("k", [1, 2])
def test_inclusion_maps_units_and_products(pds, rng, k):
    for name in ("A3", "A4"):
        pd = pds[name]
        assert fock.include(unit_k(k - 1, pd), pd).distance(unit_k(k, pd)) < 1e-12
        if k >= 2:
            x = WordSeries(random_series(pd.graph, [2, 4], 3, rng).terms, k=k - 1)
            y = WordSeries(random_series(pd.graph, [2, 4], 3, rng).terms, k=k - 1)
            lhs = wedge_k(fock.include(x, pd), fock.include(y, pd), pd)
            assert lhs.distance(fock.include(wedge_k(x, y, pd), pd)) < 1e-12


def test_inclusion_of_unit_on_a2(a2):
    out = fock.include(WordSeries.unit(), a2)
    assert len(out.terms) == 2 and out.k == 1
