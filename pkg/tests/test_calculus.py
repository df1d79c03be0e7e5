import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from freetransport.calculus import (SeriesMatrix, TensorSeries, act, all_words, block, block_matrix,
                                    contract_left, contract_right, cyclic_d_e, cyclic_gradient,
                                    hash_compose, identity_tuple, insert_gradient, jacobian,
                                    partial_e, sd_check, tensor_mul, trace_matrix)
from freetransport.series import (WordSeries, degree, free_product, random_series, substitute,
                                  symmetrize)
from freetransport.temperley_lieb import v0

seeds = st.integers(0, 2**32 - 1)
graphs = st.sampled_from(["A3", "A4", "D4"])


def rand(pd, seed, degrees=(2, 4), n=3):
    return random_series(pd.graph, degrees, n, np.random.default_rng(seed))


@pytest.mark.parametrize("name", ["A2", "A3", "A4", "A5", "D4"])
def test_gradient_of_v0_is_the_identity_tuple(pds, name):
    pd = pds[name]
    grad = cyclic_gradient(v0(pd), pd)
    for e in range(pd.graph.n_edges):
        assert set(grad[e].terms) == {(e,)}
        assert abs(grad[e].coeff((e,)) - 1.0) <= 1e-15


def test_difference_quotient_frozen(a3):
    x = WordSeries({(0, 1): 1.0})
    t = partial_e(1, x, a3)
    # cut at the letter e1, weight sigma(e1~)
    assert t.terms.keys() == {((), (1,))}
    assert t.terms[((), (1,))] == pytest.approx(2 ** -0.25)
    assert not partial_e(2, x, a3)


def test_jacobian_of_identity(a3):
    g = a3.graph
    J = jacobian(identity_tuple(a3), a3)
    for (e, f), t in J.entries.items():
        assert f == g.opp[e]
        assert t.terms == {((), ()): pytest.approx(a3.sigma[g.opp[e]])}
    tr = trace_matrix(hash_compose(J, J))
    assert tr.terms.keys() == {((), ())}
    assert tr.terms[((), ())] == pytest.approx(g.n_edges)


def test_contractions_frozen(a3):
    t = TensorSeries({((2, 3), (0, 1)): 1.0})
    assert contract_left(t, a3).terms == {(2, 3): pytest.approx(2 ** 0.25)}
    assert contract_right(TensorSeries({((0, 1), (2, 3)): 1.0}), a3).terms == {(2, 3): pytest.approx(2 ** 0.25)}


@pytest.mark.parametrize("name", ["A2", "A3", "A4", "D4"])
def test_blocks_frozen(pds, name):
    pd = pds[name]
    g = pd.graph
    for e in g.positive_edges:
        s, so, lam = pd.sigma[e], pd.sigma[g.opp[e]], pd.lam[e]
        A = block("A", e, pd)
        assert A[0, 0] == pytest.approx(0.5 * (lam + 1 / lam))
        assert np.allclose(block("JcC", e, pd), [[0, so], [s, 0]], atol=1e-14)
        assert np.allclose(block("M3", e, pd), [[0, so**3], [s**3, 0]], atol=1e-13)
        # computed numerically from the definition, recorded here
        assert np.allclose(block("M4", e, pd), [[0, s], [so, 0]], atol=1e-13)
    M = block_matrix("JcC", pd)
    assert np.allclose(M, M.T.conj().T)
    with pytest.raises(ValueError):
        block("A", g.opp[g.positive_edges[0]], pd)


def test_jacobian_of_identity_equals_block_matrix(a4):
    J = jacobian(identity_tuple(a4), a4)
    B = SeriesMatrix.from_scalars(block_matrix("JcC", a4))
    assert J.distance(B) < 1e-14


@settings(max_examples=40, deadline=None)
@given(seeds, graphs)
def test_leibniz_as_bimodule_actions(pds, seed, name):
    pd = pds[name]
    x, y = rand(pd, seed), rand(pd, seed + 7)
    one = WordSeries.unit()
    for e in range(pd.graph.n_edges):
        lhs = partial_e(e, free_product(x, y), pd)
        rhs = act(one, partial_e(e, x, pd), y) + act(x, partial_e(e, y, pd), one)
        assert lhs.distance(rhs) < 1e-12


@settings(max_examples=40, deadline=None)
@given(seeds, graphs)
def test_cyclic_derivative_ignores_symmetrization(pds, seed, name):
    pd = pds[name]
    x = rand(pd, seed, (2, 4, 6), 4)
    s = symmetrize(x, pd)
    for e in range(pd.graph.n_edges):
        assert cyclic_d_e(e, s, pd).distance(cyclic_d_e(e, x, pd)) < 1e-12


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_hash_compose_is_associative(pds, seed):
    pd = pds["A3"]
    rng = np.random.default_rng(seed)
    mats = []
    for _ in range(3):
        q = {e: random_series(pd.graph, [2, 4], 2, rng) for e in range(pd.graph.n_edges)}
        mats.append(jacobian(cyclic_gradient(symmetrize(WordSeries(
            {w: c for s in q.values() for w, c in s.terms.items()}), pd), pd), pd))
    A, B, C = mats
    left = hash_compose(hash_compose(A, B), C)
    right = hash_compose(A, hash_compose(B, C))
    assert left.distance(right) < 1e-10


def test_tensor_product_convention():
    a = TensorSeries({((0,), (1,)): 1.0})
    b = TensorSeries({((2,), (3,)): 1.0})
    assert tensor_mul(a, b).terms == {((0, 2), (3, 1)): 1.0}
    assert tensor_mul(a, b, trunc=3).terms == {}


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_insert_gradient_is_first_order_of_substitution(pds, seed):
    pd = pds["A3"]
    rng = np.random.default_rng(seed)
    x = random_series(pd.graph, [2, 4], 3, rng)
    g = symmetrize(random_series(pd.graph, [4], 2, rng), pd)
    grad = cyclic_gradient(g, pd)
    first = insert_gradient(x, g, pd)

    def defect(eps):
        images = {e: WordSeries({(e,): 1.0}) + grad[e] * eps for e in range(pd.graph.n_edges)}
        return (substitute(x, images, None) - x - first * eps).max_abs()

    # the remainder is quadratic in eps
    assert defect(1e-3) / defect(1e-4) == pytest.approx(100.0, rel=0.05)


def test_all_words_counts():
    words = all_words(3, 2)
    assert len(words) == 1 + 3 + 9
    assert max(degree(w) for w in words) == 2


@pytest.mark.parametrize("name", ["A2", "A3", "A4", "D4"])
def test_schwinger_dyson_for_v0(pds, name):
    res, _ = sd_check(v0(pd := pds[name]), pd, max_degree=4)
    assert res <= 1e-9


def test_schwinger_dyson_detects_a_wrong_potential(a3):
    res, _ = sd_check(v0(a3) * 1.1, a3, max_degree=3)
    assert res > 1e-2
