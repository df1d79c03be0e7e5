"""Exact sparse Fock-space operators: creation, annihilation and the vacuum state.

Basis labels share the word encoding of :mod:`freetransport.series`:
``()`` is the vacuum, ``(~v,)`` the vertex vector ``v`` of the bimodule
variant, and any other tuple a tensor ``e_1 (x) ... (x) e_n``.  The inner
product of two edge tensors is ``prod [a_i == b_i] / sigma(a_i)``.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping

import numpy as np

from .graph import PerronData
from .series import WordSeries, Word, degree, enumerate_paths, is_empty, split_gr_k, word_start

DEFAULT_MAX_LENGTH = 16


class FockVector:
    """Sparse vector in the plain Fock space or in its vertex-bimodule variant."""

    __slots__ = ("terms", "bimodule")

    def __init__(self, terms: Mapping[Word, complex] | None = None, bimodule: bool = False):
        self.terms = {w: complex(c) for w, c in (terms or {}).items() if c != 0}
        self.bimodule = bimodule

    @classmethod
    def vacuum(cls) -> "FockVector":
        return cls({(): 1.0})

    @classmethod
    def vertex(cls, v: int) -> "FockVector":
        return cls({(~v,): 1.0}, bimodule=True)

    @classmethod
    def basis(cls, path: Iterable[int]) -> "FockVector":
        return cls({tuple(path): 1.0})

    def __add__(self, other: "FockVector") -> "FockVector":
        out = dict(self.terms)
        for w, c in other.terms.items():
            out[w] = out.get(w, 0.0) + c
        return FockVector(out, self.bimodule)

    def __mul__(self, s: complex) -> "FockVector":
        return FockVector({w: c * s for w, c in self.terms.items()}, self.bimodule)

    __rmul__ = __mul__

    def coeff(self, label: Word) -> complex:
        return self.terms.get(tuple(label), 0.0)

    def distance(self, other: "FockVector") -> float:
        keys = set(self.terms) | set(other.terms)
        return max((abs(self.coeff(k) - other.coeff(k)) for k in keys), default=0.0)


def apply_l(e: int, x: FockVector, pd: PerronData) -> FockVector:
    """Creation: prepend the edge e."""
    g = pd.graph
    out: dict = {}
    for w, c in x.terms.items():
        if w == ():
            out[(e,)] = out.get((e,), 0.0) + c
        elif w[0] < 0:
            if g.dst[e] == ~w[0]:
                out[(e,)] = out.get((e,), 0.0) + c
        elif not x.bimodule or g.dst[e] == g.src[w[0]]:
            key = (e,) + w
            out[key] = out.get(key, 0.0) + c
    return FockVector(out, x.bimodule)


def apply_l_star(e: int, x: FockVector, pd: PerronData) -> FockVector:
    """Annihilation: strip a leading e with weight ||e||^2 = 1/sigma(e)."""
    g = pd.graph
    norm2 = 1.0 / pd.sigma[e]
    out: dict = {}
    for w, c in x.terms.items():
        if not w or w[0] != e:
            continue
        rest = w[1:]
        if not rest and x.bimodule:
            rest = (~g.dst[e],)
        out[rest] = out.get(rest, 0.0) + c * norm2
    return FockVector(out, x.bimodule)


def apply_c(e: int, x: FockVector, pd: PerronData) -> FockVector:
    """The generalized circular operator l(e) + l(e°)*."""
    return apply_l(e, x, pd) + apply_l_star(pd.graph.opp[e], x, pd)


def apply_word(word: Iterable[int], x: FockVector, pd: PerronData) -> FockVector:
    """Apply c(e_1)...c(e_m) to x, rightmost letter first."""
    for e in reversed(tuple(word)):
        x = apply_c(e, x, pd)
    return x


def _check_length(word: Word, max_length: int) -> None:
    if len(word) > max_length:
        raise ValueError(f"word of length {len(word)} exceeds the Fock length limit {max_length}")


def vacuum_moment(word: Iterable[int], pd: PerronData, max_length: int = DEFAULT_MAX_LENGTH) -> complex:
    """<vacuum, c(e_1)...c(e_m) vacuum> by exact operator application.

    Tensors longer than the number of operators still to be applied cannot
    return to the vacuum and are discarded; this is exact.
    """
    word = tuple(word)
    if is_empty(word):
        return 1.0
    _check_length(word, max_length)
    if len(word) % 2:
        return 0.0
    cache = pd.cache.setdefault("vacuum", {})
    hit = cache.get(word)
    if hit is not None:
        return hit
    opp = pd.graph.opp
    inv_sigma = 1.0 / pd.sigma
    vec: dict = {(): 1.0}
    m = len(word)
    for step, e in enumerate(reversed(word)):
        remaining = m - step - 1
        ann = opp[e]
        nxt: dict = {}
        for w, c in vec.items():
            if len(w) + 1 <= remaining:
                key = (e,) + w
                nxt[key] = nxt.get(key, 0.0) + c
            if w and w[0] == ann:
                rest = w[1:]
                nxt[rest] = nxt.get(rest, 0.0) + c * inv_sigma[ann]
        vec = nxt
        if not vec:
            break
    value = vec.get((), 0.0)
    cache[word] = value
    return value


def state(x: WordSeries, pd: PerronData, max_length: int = DEFAULT_MAX_LENGTH) -> complex:
    """Vacuum state extended linearly over a series; empty words give 1."""
    total = 0.0 + 0.0j
    for w, c in x.terms.items():
        total += c * (1.0 if is_empty(w) else vacuum_moment(w, pd, max_length))
    return total


def phi_v(word: Iterable[int], v: int, pd: PerronData, max_length: int = DEFAULT_MAX_LENGTH) -> complex:
    """Coefficient of the vertex vector v in c(e_1)...c(e_m) v (bimodule variant)."""
    word = tuple(word)
    if is_empty(word):
        if word == ():
            return 1.0
        return 1.0 if ~word[0] == v else 0.0
    _check_length(word, max_length)
    out = apply_word(word, FockVector.vertex(v), pd)
    return out.coeff((~v,))


def inner(x: FockVector, y: FockVector, pd: PerronData) -> complex:
    """<x, y>, conjugate-linear in the first slot."""
    total = 0.0 + 0.0j
    for w, c in x.terms.items():
        d = y.terms.get(w)
        if d is None:
            continue
        weight = 1.0
        if not is_empty(w):
            for e in w:
                weight /= pd.sigma[e]
        total += c.conjugate() * d * weight
    return total


# higher gradings


def c_k_apply(x: WordSeries, vec: FockVector, pd: PerronData) -> FockVector:
    """Apply the grading-k operator of x: l(e_1)..l(e_k) c(u) l(f_k)*..l(f_1)*."""
    g = pd.graph
    k = x.k
    total = FockVector({}, vec.bimodule)
    for w, c in x.terms.items():
        if k == 0:
            out = vec if is_empty(w) else apply_word(w, vec, pd)
        else:
            u, fo, es = split_gr_k(w, k)
            fs = [g.opp[fo[k - 1 - i]] for i in range(k)]
            out = vec
            for f in fs:
                out = apply_l_star(f, out, pd)
            if degree(u):
                out = apply_word(u, out, pd)
            for e in reversed(es):
                out = apply_l(e, out, pd)
        total = total + out * c
    return total


def phi_k(x: WordSeries, pd: PerronData) -> complex:
    """delta^-k * sum over length-k paths p of sqrt(mu(s(p))/mu(t(p))) <p, c_k(x) p>."""
    k = x.k
    if k == 0:
        return state(x, pd)
    g = pd.graph
    total = 0.0 + 0.0j
    for p in enumerate_paths(g, k):
        vec = FockVector.basis(p)
        weight = np.sqrt(pd.mu[g.src[p[0]]] / pd.mu[g.dst[p[-1]]])
        total += weight * inner(vec, c_k_apply(x, vec, pd), pd)
    return total / pd.delta**k


def include(x: WordSeries, pd: PerronData) -> WordSeries:
    """Raise the grading by one: conjugate by sigma(a) l(a) ... l(a)* summed over edges a.

    A grading-(k-1) word ``u f° e`` maps to ``sum_a sigma(a) * u f° a° a e``
    over edges a ending where the side strings start.
    """
    g = pd.graph
    k1 = x.k
    out: dict = {}
    for w, c in x.terms.items():
        if k1 == 0:
            anchor = None if w == () else word_start(w, g)
            prefix = () if is_empty(w) else w
            tail: tuple = ()
        else:
            u, fo, es = split_gr_k(w, k1)
            anchor = g.src[es[0]]
            prefix, tail = u + fo, es
        for a in range(g.n_edges):
            if anchor is not None and g.dst[a] != anchor:
                continue
            key = prefix + (g.opp[a], a) + tail
            out[key] = out.get(key, 0.0) + c * pd.sigma[a]
    return WordSeries(out, k=k1 + 1)
