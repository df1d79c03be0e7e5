"""Non-crossing pairings, the pairing-sum trace and the quadratic potential."""

from __future__ import annotations

from functools import lru_cache

from .graph import PerronData
from .series import (WordSeries, Word, degree, is_empty, is_loop, split_gr_k,
                     word_start)

Pairing = tuple[tuple[int, int], ...]


@lru_cache(maxsize=None)
def enumerate_pairings(n: int) -> tuple[Pairing, ...]:
    """All non-crossing perfect pairings of points 0..2n-1.

    Point 0 is matched with an odd point j; the points strictly inside and
    strictly outside (0, j) are paired independently.
    """
    if n == 0:
        return ((),)
    out = []
    for m in range(n):
        j = 2 * m + 1
        for inner in enumerate_pairings(m):
            for outer in enumerate_pairings(n - 1 - m):
                out.append(((0, j),)
                           + tuple((a + 1, b + 1) for a, b in inner)
                           + tuple((a + j + 1, b + j + 1) for a, b in outer))
    return tuple(out)


def is_noncrossing(pairing: Pairing) -> bool:
    for a, b in pairing:
        for c, d in pairing:
            if a < c < b < d:
                return False
    return True


def catalan(n: int) -> int:
    c = 1
    for i in range(n):
        c = c * 2 * (2 * i + 1) // (i + 2)
    return c


def pairing_weight(word: Word, pairing: Pairing, pd: PerronData) -> float:
    """Product over pairs (i<j) of [e_j = opposite(e_i)] * sigma(e_i)."""
    opp = pd.graph.opp
    w = 1.0
    for i, j in pairing:
        if word[j] != opp[word[i]]:
            return 0.0
        w *= pd.sigma[word[i]]
    return w


def pairing_moment_enumerated(word: Word, pd: PerronData) -> float:
    """Pairing sum by explicit enumeration of all non-crossing pairings."""
    if is_empty(word):
        return 1.0
    if len(word) % 2 or not is_loop(word, pd.graph):
        return 0.0
    return sum(pairing_weight(word, p, pd) for p in enumerate_pairings(len(word) // 2))


def pairing_moment(word: Word, pd: PerronData) -> float:
    """Sum over non-crossing pairings of the word's positions of the pair weights.

    Evaluated by the first-point recursion (the same decomposition that
    generates the pairings), memoised on sub-intervals.  Odd words and
    non-loops evaluate to 0; empty words to 1.
    """
    if is_empty(word):
        return 1.0
    n = len(word)
    if n % 2 or not is_loop(word, pd.graph):
        return 0.0
    opp = pd.graph.opp
    sigma = pd.sigma
    memo: dict[tuple[int, int], float] = {}

    def interval(i: int, j: int) -> float:
        # positions i..j-1
        if i >= j:
            return 1.0
        key = (i, j)
        if key in memo:
            return memo[key]
        total = 0.0
        target = opp[word[i]]
        for k in range(i + 1, j, 2):
            if word[k] == target:
                total += sigma[word[i]] * interval(i + 1, k) * interval(k + 1, j)
        memo[key] = total
        return total

    return interval(0, n)


def v0(pd: PerronData) -> WordSeries:
    """Quadratic potential: (1/2) * sum_e sigma(e) * e e°.

    This normalisation is the one whose cyclic gradient is the identity tuple
    and which is invariant under weighted rotation.
    """
    g = pd.graph
    return WordSeries({(e, g.opp[e]): 0.5 * pd.sigma[e] for e in range(g.n_edges)})


def trace_k(x: WordSeries, pd: PerronData) -> dict[int, complex]:
    """Vertex-valued trace of a grading-k series.

    For k = 0 each loop contributes its pairing sum at its base vertex.  For
    k >= 1 a word ``u f° e`` survives only when the side strings close up
    (f = e); it then contributes
    ``delta**-k * (mu(s(e_1))/mu(t(e_k)))**1.5 * pairing_moment(u)`` at the
    vertex s(e_1).
    """
    g = pd.graph
    k = x.k
    out = {v: 0.0 + 0.0j for v in range(g.n_vertices)}
    for w, c in x.terms.items():
        if k == 0:
            if w == ():
                for v in out:
                    out[v] += c
            elif is_empty(w):
                out[~w[0]] += c
            else:
                out[word_start(w, g)] += c * pairing_moment(w, pd)
            continue
        u, fo, es = split_gr_k(w, k)
        if any(g.opp[fo[k - 1 - i]] != es[i] for i in range(k)):
            continue
        s0, t0 = g.src[es[0]], g.dst[es[-1]]
        inner = pairing_moment(u, pd) if degree(u) else 1.0
        out[s0] += c * pd.delta ** (-k) * (pd.mu[s0] / pd.mu[t0]) ** 1.5 * inner
    return out


def total_trace(x: WordSeries, pd: PerronData) -> complex:
    """Sum over vertices of :func:`trace_k`, counting the scalar unit once."""
    if x.k == 0:
        total = 0.0 + 0.0j
        for w, c in x.terms.items():
            total += c if is_empty(w) else c * pairing_moment(w, pd)
        return total
    return sum(trace_k(x, pd).values())

