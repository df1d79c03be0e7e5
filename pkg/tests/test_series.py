import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from freetransport.series import (WordSeries, cat, concat_loops, degree, enumerate_loops,
                                  enumerate_paths, free_product, involution, is_loop, multiply,
                                  norm_R, norm_R_sigma, number_map, random_series, rho, rho_power,
                                  series_from_words, sigma_inv_map, sigma_minus_i, substitute,
                                  symmetrize, vertex_word)

seeds = st.integers(0, 2**32 - 1)
fast = settings(max_examples=40, deadline=None)


def rand(pd, seed, degrees=(2, 4, 6), n=4):
    return random_series(pd.graph, degrees, n, np.random.default_rng(seed))


def test_word_basics(a3):
    g = a3.graph
    w = (0, 1, 0, 1)
    assert degree(w) == 4 and is_loop(w, g)
    assert degree(vertex_word(1)) == 0
    assert cat((), w) == w and cat(vertex_word(0), w) == w
    assert concat_loops((0, 1), (2, 3), g) is None
    assert concat_loops((0, 1), vertex_word(0), g) == (0, 1)


def test_series_arithmetic_and_truncation():
    x = WordSeries({(0, 1): 2.0, (0, 1, 0, 1): 1.0})
    y = WordSeries({(0, 1): -2.0})
    assert (x + y).terms == {(0, 1, 0, 1): 1.0}
    assert (x * 0.5).coeff((0, 1)) == 1.0
    assert x.truncate(2).degrees() == [2]
    assert WordSeries({(0, 1): 1e-310}).terms == {}


def test_document_round_trip(a3):
    g = a3.graph
    x = series_from_words(g, {"e1 e1~": 1.5, "e1~ e1 e2~ e2": 2j}) + WordSeries({vertex_word(1): 3.0})
    assert WordSeries.from_document(x.to_document(g), g).distance(x) == 0.0


def test_from_document_rejects_non_paths(a3):
    with pytest.raises(ValueError, match="not a path"):
        WordSeries.from_document({"terms": [{"word": ["e1", "e2"], "re": 1.0}]}, a3.graph)


def test_multiply_requires_matching_base(a3):
    g = a3.graph
    x = series_from_words(g, ["e1 e1~"])
    y = series_from_words(g, ["e2 e2~"])
    assert multiply(x, y, g).terms == {}
    assert multiply(x, x, g).terms == {(0, 1, 0, 1): 1.0}


def test_rotation_frozen_example(a3):
    g = a3.graph
    x = series_from_words(g, ["e1 e1~"])
    assert rho(x, a3).coeff((1, 0)) == pytest.approx(2 ** -0.5, abs=1e-15)


def test_sigma_minus_i_frozen_example(a3):
    x = series_from_words(a3.graph, ["e1"])
    assert sigma_minus_i(x, a3).coeff((0,)) == pytest.approx(math.sqrt(2), abs=1e-14)
    loop = series_from_words(a3.graph, ["e1 e1~"])
    assert sigma_minus_i(loop, a3).distance(loop) == 0.0


def test_constants_are_fixed(a3):
    c = WordSeries({(): 2.0, vertex_word(0): 1.0})
    assert rho(c, a3).distance(c) == 0.0
    assert symmetrize(c, a3).distance(c) == 0.0


def test_norm_frozen_example(a3):
    # letter price sqrt(sigma(e) + sigma(e°)) * R, two letters
    R = 4 * math.sqrt(2)
    x = series_from_words(a3.graph, ["e1 e1~"])
    expected = (2 ** 0.25 + 2 ** -0.25) * 32
    assert norm_R(x, R, a3) == pytest.approx(expected, rel=1e-14)
    assert norm_R(x, R, a3) == pytest.approx(64.96331, abs=1e-4)


def test_number_map_inverse():
    x = WordSeries({(0, 1): 3.0, (0, 1, 0, 1): 4.0})
    assert sigma_inv_map(number_map(x)).distance(x) < 1e-15
    with pytest.raises(ValueError):
        sigma_inv_map(WordSeries({(): 1.0}))


@pytest.mark.parametrize("name", ["A3", "A4", "D4"])
def test_full_turn_is_identity_on_loops(pds, name):
    pd = pds[name]
    for w in enumerate_loops(pd.graph, 6):
        x = WordSeries({w: 1.0})
        assert rho_power(x, 6, pd).distance(x) < 1e-14


@fast
@given(seeds)
def test_symmetrize_is_idempotent_and_rotation_invariant(pds, seed):
    pd = pds["A4"]
    x = rand(pd, seed)
    s = symmetrize(x, pd)
    assert symmetrize(s, pd).distance(s) < 1e-12
    assert rho(s, pd).distance(s) < 1e-12


@fast
@given(seeds)
def test_norm_inequalities(pds, seed):
    pd = pds["A4"]
    R = 4 * math.sqrt(pd.delta)
    x = rand(pd, seed)
    assert norm_R(x, R, pd) <= norm_R_sigma(x, R, pd) * (1 + 1e-12)
    s = symmetrize(x, pd)
    assert norm_R(s, R, pd) == pytest.approx(norm_R_sigma(s, R, pd), rel=1e-10)
    for n in x.degrees():
        part = x.part(n)
        assert norm_R_sigma(rho(part, pd), R, pd) == pytest.approx(norm_R_sigma(part, R, pd), rel=1e-10)


@fast
@given(seeds)
def test_involution_is_an_anti_automorphism(pds, seed):
    pd = pds["A3"]
    x, y = rand(pd, seed), rand(pd, seed + 1)
    g = pd.graph
    assert involution(involution(x, g), g).distance(x) == 0.0
    lhs = involution(free_product(x, y), g)
    rhs = free_product(involution(y, g), involution(x, g))
    assert lhs.distance(rhs) < 1e-12


@fast
@given(seeds)
def test_substitute_identity_and_degree_bookkeeping(pds, seed):
    pd = pds["A3"]
    g = pd.graph
    x = rand(pd, seed)
    ident = {e: WordSeries({(e,): 1.0}) for e in range(g.n_edges)}
    assert substitute(x, ident, None, g).distance(x) == 0.0
    rng = np.random.default_rng(seed)
    images = {}
    for e in range(g.n_edges):
        extra = [p for p in enumerate_paths(g, 3, start=g.src[e], end=g.dst[e])]
        images[e] = WordSeries({(e,): 1.0, extra[int(rng.integers(len(extra)))]: 0.3})
    out = substitute(x, images, 10, g)
    low = min(x.degrees())
    assert all(low <= degree(w) <= 10 for w in out.terms)
    # the degree-preserving part reproduces x below the cap
    assert out.part(low).distance(x.part(low)) < 1e-12


def test_substitute_checks_path_compatibility(a3):
    g = a3.graph
    with pytest.raises(ValueError, match="does not run"):
        substitute(WordSeries({(0, 1): 1.0}), {0: WordSeries({(2,): 1.0})}, None, g)
