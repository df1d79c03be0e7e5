"""Sparse series over edge words.

A word is a tuple of edge indices.  Two kinds of empty word exist: ``()`` is
the scalar unit (the sum of all vertex units), and ``(~v,)`` is the empty
loop sitting at vertex ``v``.  Both have degree 0 and behave as the constant
1 when a word is read as a monomial in the variables ``C_e``.

Two products are provided.  :func:`multiply` is the graded product of loops,
which is zero when base vertices differ.  :func:`free_product` is the product
of monomials in the free algebra, used by the calculus and the transport
solver where words are read as operator products.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping

import numpy as np

from .graph import BipartiteGraph, PerronData

Word = tuple[int, ...]
PRUNE = 1e-300


def vertex_word(v: int) -> Word:
    return (~v,)


def is_empty(w: Word) -> bool:
    return not w or w[0] < 0


def degree(w: Word) -> int:
    return 0 if is_empty(w) else len(w)


def word_start(w: Word, graph: BipartiteGraph) -> int | None:
    if not w:
        return None
    return ~w[0] if w[0] < 0 else graph.src[w[0]]


def word_end(w: Word, graph: BipartiteGraph) -> int | None:
    if not w:
        return None
    return ~w[0] if w[0] < 0 else graph.dst[w[-1]]


def is_path(w: Word, graph: BipartiteGraph) -> bool:
    if is_empty(w):
        return True
    return all(graph.dst[a] == graph.src[b] for a, b in zip(w, w[1:]))


def is_loop(w: Word, graph: BipartiteGraph) -> bool:
    return is_path(w, graph) and word_start(w, graph) == word_end(w, graph)


def cat(a: Word, b: Word) -> Word:
    """Concatenate two monomials, empty words acting as the unit."""
    if is_empty(a):
        return b if (b or not a) else a
    if is_empty(b):
        return a
    return a + b


def _add(terms: dict, w: Word, c: complex) -> None:
    terms[w] = terms.get(w, 0.0) + c


class WordSeries:
    """Sparse map from words to complex coefficients.

    ``k`` is the grading tag and ``trunc`` an optional maximal degree; terms
    above ``trunc`` and coefficients below 1e-300 in magnitude are dropped.
    """

    __slots__ = ("terms", "k", "trunc")

    def __init__(self, terms: Mapping[Word, complex] | None = None, k: int = 0,
                 trunc: int | None = None):
        self.k = k
        self.trunc = trunc
        clean = {}
        for w, c in (terms or {}).items():
            if abs(c) < PRUNE:
                continue
            if trunc is not None and degree(w) > trunc:
                continue
            clean[tuple(w)] = complex(c)
        self.terms = clean

    @classmethod
    def word(cls, w: Iterable[int], coeff: complex = 1.0, k: int = 0) -> "WordSeries":
        return cls({tuple(w): coeff}, k=k)

    @classmethod
    def unit(cls) -> "WordSeries":
        return cls({(): 1.0})

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms.items())

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __repr__(self) -> str:
        inner = ", ".join(f"{w}: {c:.6g}" for w, c in list(self.terms.items())[:6])
        more = ", ..." if len(self.terms) > 6 else ""
        return f"WordSeries({{{inner}{more}}}, k={self.k})"

    def _like(self, terms: dict) -> "WordSeries":
        return WordSeries(terms, k=self.k, trunc=self.trunc)

    def __add__(self, other: "WordSeries") -> "WordSeries":
        out = dict(self.terms)
        for w, c in other.terms.items():
            _add(out, w, c)
        return self._like(out)

    def __sub__(self, other: "WordSeries") -> "WordSeries":
        return self + other * -1.0

    def __neg__(self) -> "WordSeries":
        return self * -1.0

    def __mul__(self, s: complex) -> "WordSeries":
        return self._like({w: c * s for w, c in self.terms.items()})

    __rmul__ = __mul__

    def coeff(self, w: Iterable[int]) -> complex:
        return self.terms.get(tuple(w), 0.0)

    def degrees(self) -> list[int]:
        return sorted({degree(w) for w in self.terms})

    def max_abs(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def part(self, n: int) -> "WordSeries":
        """Homogeneous component of degree ``n``."""
        return self._like({w: c for w, c in self.terms.items() if degree(w) == n})

    def drop_constants(self) -> "WordSeries":
        return self._like({w: c for w, c in self.terms.items() if degree(w) > 0})

    def truncate(self, D: int | None) -> "WordSeries":
        return WordSeries(self.terms, k=self.k, trunc=D)

    def conj(self) -> "WordSeries":
        return self._like({w: c.conjugate() for w, c in self.terms.items()})

    def distance(self, other: "WordSeries") -> float:
        """Largest coefficient difference."""
        return (self - other).max_abs()

    # serialization

    def to_document(self, graph: BipartiteGraph) -> dict:
        rows = []
        for w in sorted(self.terms):
            c = self.terms[w]
            row = {"word": [] if is_empty(w) else [graph.edge_ids[e] for e in w],
                   "re": c.real, "im": c.imag}
            if w and w[0] < 0:
                row["vertex"] = graph.vertex_ids[~w[0]]
            rows.append(row)
        return {"k": self.k, "terms": rows}

    @classmethod
    def from_document(cls, doc, graph: BipartiteGraph) -> "WordSeries":
        if isinstance(doc, list):
            doc = {"k": 0, "terms": doc}
        terms: dict = {}
        for row in doc["terms"]:
            letters = row.get("word", [])
            if letters:
                w = tuple(graph.edge(e) for e in letters)
                if not is_path(w, graph):
                    raise ValueError(f"word {letters} is not a path in {graph.name}")
            elif "vertex" in row:
                w = vertex_word(graph.vertex(row["vertex"]))
            else:
                w = ()
            _add(terms, w, complex(row.get("re", 0.0), row.get("im", 0.0)))
        return cls(terms, k=int(doc.get("k", 0)))


def series_from_words(graph: BipartiteGraph, items: Mapping[str, complex] | Iterable) -> WordSeries:
    """Convenience constructor from space-separated edge names, e.g. ``{"e1 e1~": 1}``."""
    if not isinstance(items, Mapping):
        items = {s: 1.0 for s in items}
    terms: dict = {}
    for text, c in items.items():
        w = tuple(graph.edge(e) for e in text.split())
        _add(terms, w, c)
    return WordSeries(terms)


# products


def concat_loops(a: Word, b: Word, graph: BipartiteGraph) -> Word | None:
    """Graded product of two words, ``None`` when the endpoints do not meet."""
    if a == ():
        return b
    if b == ():
        return a
    if word_end(a, graph) != word_start(b, graph):
        return None
    if a[0] < 0:
        return b
    if b[0] < 0:
        return a
    return a + b


def multiply(x: WordSeries, y: WordSeries, graph: BipartiteGraph,
             trunc: int | None = None) -> WordSeries:
    """Product of grading-0 series: concatenation when base vertices match, else 0."""
    if x.k != 0 or y.k != 0:
        raise ValueError("multiply needs grading 0; use wedge_k for higher gradings")
    D = trunc if trunc is not None else _min_trunc(x, y)
    out: dict = {}
    for a, ca in x.terms.items():
        da = degree(a)
        for b, cb in y.terms.items():
            if D is not None and da + degree(b) > D:
                continue
            w = concat_loops(a, b, graph)
            if w is not None:
                _add(out, w, ca * cb)
    return WordSeries(out, trunc=D)


def free_product(x: WordSeries, y: WordSeries, trunc: int | None = None) -> WordSeries:
    """Product of monomials in the free algebra generated by the edges."""
    out: dict = {}
    for a, ca in x.terms.items():
        da = degree(a)
        for b, cb in y.terms.items():
            if trunc is not None and da + degree(b) > trunc:
                continue
            _add(out, cat(a, b), ca * cb)
    return WordSeries(out, trunc=trunc)


def _min_trunc(x: WordSeries, y: WordSeries) -> int | None:
    ts = [t for t in (x.trunc, y.trunc) if t is not None]
    return min(ts) if ts else None


def split_gr_k(w: Word, k: int) -> tuple[Word, Word, Word]:
    """Split ``u f_k°...f_1° e_1...e_k`` into ``(u, (f_1..f_k) reversed-opposite, (e_1..e_k))``.

    Returns ``(u, fo, es)`` where ``fo`` is the literal block ``f_k°...f_1°``.
    """
    if degree(w) < 2 * k:
        raise ValueError(f"word of degree {degree(w)} is too short for grading {k}")
    n = len(w)
    return w[: n - 2 * k], w[n - 2 * k: n - k], w[n - k:]


def wedge_k(x: WordSeries, y: WordSeries, pd: PerronData) -> WordSeries:
    """Product of two grading-k series (k >= 1).

    ``(u f° e) ^ (u' g° h) = prod_i [f_i == h_i] / sigma(h_i) * (u u' g° e)``.
    """
    if x.k != y.k:
        raise ValueError(f"grading mismatch: {x.k} vs {y.k}")
    k = x.k
    if k == 0:
        return multiply(x, y, pd.graph)
    g = pd.graph
    out: dict = {}
    for a, ca in x.terms.items():
        u, fo, es = split_gr_k(a, k)
        for b, cb in y.terms.items():
            u2, go, hs = split_gr_k(b, k)
            # fo = f_k°...f_1°, so f_i = opp(fo[k-i])
            if any(g.opp[fo[k - 1 - i]] != hs[i] for i in range(k)):
                continue
            weight = 1.0
            for h in hs:
                weight /= pd.sigma[h]
            _add(out, u + u2 + go + es, ca * cb * weight)
    return WordSeries(out, k=k)


def unit_k(k: int, pd: PerronData) -> WordSeries:
    """Unit of grading k: sum over length-k paths p of prod sigma(p_i) * p° p."""
    g = pd.graph
    if k == 0:
        return WordSeries.unit()
    out = {}
    for p in enumerate_paths(g, k):
        weight = float(np.prod([pd.sigma[e] for e in p]))
        out[tuple(g.opp[e] for e in reversed(p)) + p] = weight
    return WordSeries(out, k=k)


def involution(x: WordSeries, graph: BipartiteGraph) -> WordSeries:
    """Reverse each word, replace letters by opposites, conjugate coefficients."""
    out: dict = {}
    for w, c in x.terms.items():
        w2 = w if is_empty(w) else tuple(graph.opp[e] for e in reversed(w))
        _add(out, w2, c.conjugate())
    return WordSeries(out, k=x.k, trunc=x.trunc)


# rotations and degree maps


def _rotate(w: Word, k: int, pd: PerronData) -> tuple[Word, float]:
    """Move the last k letters to the front; each moved letter e costs mu(t(e))/mu(s(e))."""
    n = degree(w)
    if n == 0 or k == 0:
        return w, 1.0
    g = pd.graph
    q, r = divmod(k, n)
    factor = (pd.mu[g.dst[w[-1]]] / pd.mu[g.src[w[0]]]) ** q
    if r:
        factor *= pd.mu[g.dst[w[-1]]] / pd.mu[g.src[w[n - r]]]
        w = w[n - r:] + w[: n - r]
    return w, float(factor)


def rho_power(x: WordSeries, k: int, pd: PerronData) -> WordSeries:
    """k-fold rotation moving the last letter to the front with a mu-ratio weight."""
    out: dict = {}
    for w, c in x.terms.items():
        w2, f = _rotate(w, k, pd)
        _add(out, w2, c * f)
    return WordSeries(out, k=x.k, trunc=x.trunc)


def rho(x: WordSeries, pd: PerronData) -> WordSeries:
    return rho_power(x, 1, pd)


def sigma_minus_i(x: WordSeries, pd: PerronData) -> WordSeries:
    """Multiply each word by mu(end)/mu(start); loops are fixed."""
    g = pd.graph
    out = {}
    for w, c in x.terms.items():
        if degree(w) == 0:
            out[w] = c
        else:
            out[w] = c * pd.mu[g.dst[w[-1]]] / pd.mu[g.src[w[0]]]
    return WordSeries(out, k=x.k, trunc=x.trunc)


def number_map(x: WordSeries) -> WordSeries:
    return x._like({w: c * degree(w) for w, c in x.terms.items()})


def sigma_inv_map(x: WordSeries) -> WordSeries:
    """Divide degree-n terms by n; undefined on constants."""
    for w in x.terms:
        if degree(w) == 0:
            raise ValueError("inverse degree map is undefined on a constant term")
    return x._like({w: c / degree(w) for w, c in x.terms.items()})


def symmetrize(x: WordSeries, pd: PerronData) -> WordSeries:
    """Average every word over its n weighted rotations."""
    out: dict = {}
    for w, c in x.terms.items():
        n = degree(w)
        if n == 0:
            _add(out, w, c)
            continue
        for k in range(1, n + 1):
            w2, f = _rotate(w, k, pd)
            _add(out, w2, c * f / n)
    return WordSeries(out, k=x.k, trunc=x.trunc)


# norms


def letter_weights(R: float, pd: PerronData) -> np.ndarray:
    """Price of one letter: sqrt(sigma(e) + sigma(e°)) * R."""
    g = pd.graph
    return np.array([math.sqrt(pd.sigma[e] + pd.sigma[g.opp[e]]) * R for e in range(g.n_edges)])


def _word_weight(w: Word, weights: np.ndarray) -> float:
    if is_empty(w):
        return 1.0
    p = 1.0
    for e in w:
        p *= weights[e]
    return p


def norm_R(x: WordSeries, R: float, pd: PerronData) -> float:
    weights = letter_weights(R, pd)
    return float(sum(abs(c) * _word_weight(w, weights) for w, c in x.terms.items()))


def norm_R_sigma(x: WordSeries, R: float, pd: PerronData) -> float:
    """Sum over degrees of the largest R-norm among the rotations of that component."""
    weights = letter_weights(R, pd)
    total = 0.0
    for n in x.degrees():
        comp = x.part(n)
        best = 0.0
        for k in range(max(1, n)):
            rot = rho_power(comp, k, pd) if k else comp
            best = max(best, sum(abs(c) * _word_weight(w, weights) for w, c in rot.terms.items()))
        total += best
    return total


# substitution


def substitute(x: WordSeries, images: Mapping[int, WordSeries], D: int | None,
               graph: BipartiteGraph | None = None) -> WordSeries:
    """Replace each letter e by ``images[e]`` and expand, dropping degrees above D.

    Letters missing from ``images`` are kept.  With ``graph`` given, every
    image word is checked to run from s(e) to t(e).
    """
    if graph is not None:
        for e, img in images.items():
            for w in img.terms:
                if is_empty(w) or word_start(w, graph) != graph.src[e] or word_end(w, graph) != graph.dst[e] \
                        or not is_path(w, graph):
                    raise ValueError(
                        f"image of {graph.edge_ids[e]!r} contains a word that does not run "
                        f"from its source to its target")
    img_terms = {e: list(s.terms.items()) for e, s in images.items()}
    min_deg = {e: min((degree(w) for w, _ in t), default=0) for e, t in img_terms.items()}
    out: dict = {}
    for w, c in x.terms.items():
        if degree(w) == 0:
            _add(out, w, c)
            continue
        # the smallest degree still to come bounds which partial products can survive
        tail = [0] * (len(w) + 1)
        for i in range(len(w) - 1, -1, -1):
            tail[i] = tail[i + 1] + min_deg.get(w[i], 1)
        partial = {(): c}
        for i, e in enumerate(w):
            terms = img_terms.get(e, [((e,), 1.0)])
            nxt: dict = {}
            for p, a in partial.items():
                dp = len(p)
                for q, b in terms:
                    if D is not None and dp + len(q) + tail[i + 1] > D:
                        continue
                    _add(nxt, p + q, a * b)
            partial = nxt
            if not partial:
                break
        for p, a in partial.items():
            _add(out, p, a)
    return WordSeries(out, k=x.k, trunc=D)


# enumeration helpers


def enumerate_paths(graph: BipartiteGraph, length: int, start: int | None = None,
                    end: int | None = None) -> list[Word]:
    """All composable edge sequences of the given length, in lexicographic order."""
    if length == 0:
        return [()]
    paths = [(e,) for e in range(graph.n_edges) if start is None or graph.src[e] == start]
    for _ in range(length - 1):
        paths = [p + (e,) for p in paths for e in range(graph.n_edges) if graph.src[e] == graph.dst[p[-1]]]
    if end is not None:
        paths = [p for p in paths if graph.dst[p[-1]] == end]
    return paths


def enumerate_loops(graph: BipartiteGraph, length: int, base: int | None = None) -> list[Word]:
    if length == 0:
        return [vertex_word(v) for v in range(graph.n_vertices) if base is None or v == base]
    return [p for p in enumerate_paths(graph, length, start=base) if graph.dst[p[-1]] == graph.src[p[0]]]


def random_loop(graph: BipartiteGraph, length: int, rng: np.random.Generator,
                base: int | None = None) -> Word:
    """Uniform random loop of the given even length (optionally at a fixed base)."""
    loops = enumerate_loops(graph, length, base)
    return loops[int(rng.integers(len(loops)))]


def random_series(graph: BipartiteGraph, degrees: Iterable[int], n_terms: int,
                  rng: np.random.Generator, base: int | None = None) -> WordSeries:
    degrees = list(degrees)
    terms: dict = {}
    for _ in range(n_terms):
        d = degrees[int(rng.integers(len(degrees)))]
        w = random_loop(graph, d, rng, base)
        _add(terms, w, complex(rng.normal(), rng.normal()))
    return WordSeries(terms)
