"""Difference quotients, cyclic derivatives and matrices over the tensor algebra.

Words are read as monomials in the variables ``C_e``; products are free
concatenations (:func:`freetransport.series.cat`).  A tensor ``a (x) b`` lives
in the algebra tensor its opposite, so ``(a (x) b)(c (x) d) = ac (x) db``.
"""

from __future__ import annotations

from collections.abc import Mapping

import numpy as np

from . import fock
from .graph import PerronData
from .series import WordSeries, Word, cat, degree, enumerate_paths, is_empty

Pair = tuple[Word, Word]


class TensorSeries:
    """Sparse map from word pairs (left leg, right leg) to coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Pair, complex] | None = None):
        self.terms = {k: complex(c) for k, c in (terms or {}).items() if abs(c) >= 1e-300}

    @classmethod
    def scalar(cls, c: complex) -> "TensorSeries":
        return cls({((), ()): c})

    def __add__(self, other: "TensorSeries") -> "TensorSeries":
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0.0) + c
        return TensorSeries(out)

    def __sub__(self, other: "TensorSeries") -> "TensorSeries":
        return self + other * -1.0

    def __mul__(self, s: complex) -> "TensorSeries":
        return TensorSeries({k: c * s for k, c in self.terms.items()})

    __rmul__ = __mul__

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __repr__(self) -> str:
        return f"TensorSeries({self.terms})"

    def max_abs(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def distance(self, other: "TensorSeries") -> float:
        return (self - other).max_abs()


def tensor_mul(x: TensorSeries, y: TensorSeries, trunc: int | None = None) -> TensorSeries:
    """Product ``(a (x) b)(c (x) d) = ac (x) db``; ``trunc`` caps the total degree."""
    out: dict = {}
    for (a, b), c1 in x.terms.items():
        d1 = degree(a) + degree(b)
        for (c, d), c2 in y.terms.items():
            if trunc is not None and d1 + degree(c) + degree(d) > trunc:
                continue
            key = (cat(a, c), cat(d, b))
            out[key] = out.get(key, 0.0) + c1 * c2
    return TensorSeries(out)


def act(x: WordSeries, t: TensorSeries, y: WordSeries) -> TensorSeries:
    """Bimodule action ``x . (a (x) b) . y = xa (x) by``."""
    out: dict = {}
    for u, cu in x.terms.items():
        for (a, b), c in t.terms.items():
            for v, cv in y.terms.items():
                key = (cat(u, a), cat(b, v))
                out[key] = out.get(key, 0.0) + cu * c * cv
    return TensorSeries(out)


def partial_e(e: int, x: WordSeries, pd: PerronData) -> TensorSeries:
    """Difference quotient: cut the word at each letter equal to e°, weight sigma(e)."""
    target = pd.graph.opp[e]
    s = float(pd.sigma[e])
    out: dict = {}
    for w, c in x.terms.items():
        if is_empty(w):
            continue
        for k, f in enumerate(w):
            if f == target:
                key = (w[:k], w[k + 1:])
                out[key] = out.get(key, 0.0) + c * s
    return TensorSeries(out)


def cyclic_d_e(e: int, x: WordSeries, pd: PerronData) -> WordSeries:
    """Cyclic derivative along e.

    For a word e_1..e_n and each position k with e_k = e°, contributes
    ``sigma(e°) * prod_{l>k} sigma(e_l)^2 * e_{k+1}..e_n e_1..e_{k-1}``.
    """
    target = pd.graph.opp[e]
    lam = pd.lam
    pref = float(pd.sigma[target])
    out: dict = {}
    for w, c in x.terms.items():
        if is_empty(w):
            continue
        n = len(w)
        tail = 1.0
        for k in range(n - 1, -1, -1):
            if w[k] == target:
                key = w[k + 1:] + w[:k]
                out[key] = out.get(key, 0.0) + c * pref * tail
            tail *= lam[w[k]]
    return WordSeries(out)


def cyclic_gradient(x: WordSeries, pd: PerronData) -> dict[int, WordSeries]:
    return {e: cyclic_d_e(e, x, pd) for e in range(pd.graph.n_edges)}


def insert_gradient(x: WordSeries, g: WordSeries, pd: PerronData) -> WordSeries:
    """Sum over positions i of the word with letter e_i replaced by the cyclic derivative of g along e_i."""
    grads = cyclic_gradient(g, pd)
    out: dict = {}
    for w, c in x.terms.items():
        if is_empty(w):
            continue
        for i, e in enumerate(w):
            for q, b in grads[e].terms.items():
                key = w[:i] + q + w[i + 1:]
                out[key] = out.get(key, 0.0) + c * b
    return WordSeries(out)


# matrices


class SeriesMatrix:
    """Square matrix over the edges with tensor-series entries; missing entries are zero."""

    __slots__ = ("n", "entries")

    def __init__(self, n: int, entries: Mapping[tuple[int, int], TensorSeries] | None = None):
        self.n = n
        self.entries = {k: v for k, v in (entries or {}).items() if v}

    def __getitem__(self, key: tuple[int, int]) -> TensorSeries:
        return self.entries.get(key, TensorSeries())

    @classmethod
    def from_scalars(cls, M: np.ndarray) -> "SeriesMatrix":
        n = M.shape[0]
        return cls(n, {(i, j): TensorSeries.scalar(M[i, j])
                       for i in range(n) for j in range(n) if M[i, j] != 0})

    def distance(self, other: "SeriesMatrix") -> float:
        keys = set(self.entries) | set(other.entries)
        return max((self[k].distance(other[k]) for k in keys), default=0.0)


def jacobian(q: Mapping[int, WordSeries], pd: PerronData) -> SeriesMatrix:
    """Entry (e, f) is the difference quotient along f of component e."""
    n = pd.graph.n_edges
    entries = {}
    for e, qe in q.items():
        for f in range(n):
            t = partial_e(f, qe, pd)
            if t:
                entries[(e, f)] = t
    return SeriesMatrix(n, entries)


def identity_tuple(pd: PerronData) -> dict[int, WordSeries]:
    """The tuple of variables, e -> C_e."""
    return {e: WordSeries({(e,): 1.0}) for e in range(pd.graph.n_edges)}


def hash_compose(A: SeriesMatrix, B: SeriesMatrix, trunc: int | None = None) -> SeriesMatrix:
    """Matrix product with entries multiplied by :func:`tensor_mul`."""
    rows: dict[int, list] = {}
    for (i, j), a in A.entries.items():
        rows.setdefault(i, []).append((j, a))
    cols: dict[int, list] = {}
    for (j, k), b in B.entries.items():
        cols.setdefault(j, []).append((k, b))
    out: dict = {}
    for i, row in rows.items():
        for j, a in row:
            for k, b in cols.get(j, []):
                prod = tensor_mul(a, b, trunc)
                if prod:
                    out[(i, k)] = out[(i, k)] + prod if (i, k) in out else prod
    return SeriesMatrix(A.n, out)


def trace_matrix(M: SeriesMatrix) -> TensorSeries:
    total = TensorSeries()
    for i in range(M.n):
        total = total + M[(i, i)]
    return total


def contract_left(t: TensorSeries, pd: PerronData, max_length: int = fock.DEFAULT_MAX_LENGTH) -> WordSeries:
    """Apply 1 (x) state: ``a (x) b -> state(b) * a``."""
    out: dict = {}
    for (a, b), c in t.terms.items():
        val = c * (1.0 if is_empty(b) else fock.vacuum_moment(b, pd, max_length))
        if val:
            out[a] = out.get(a, 0.0) + val
    return WordSeries(out)


def contract_right(t: TensorSeries, pd: PerronData, max_length: int = fock.DEFAULT_MAX_LENGTH) -> WordSeries:
    """Apply state (x) 1: ``a (x) b -> state(a) * b``."""
    out: dict = {}
    for (a, b), c in t.terms.items():
        val = c * (1.0 if is_empty(a) else fock.vacuum_moment(a, pd, max_length))
        if val:
            out[b] = out.get(b, 0.0) + val
    return WordSeries(out)


def state_tensor(t: TensorSeries, pd: PerronData, max_length: int = fock.DEFAULT_MAX_LENGTH) -> complex:
    """state (x) state of a tensor series."""
    total = 0.0 + 0.0j
    for (a, b), c in t.terms.items():
        fa = 1.0 if is_empty(a) else fock.vacuum_moment(a, pd, max_length)
        if fa:
            total += c * fa * (1.0 if is_empty(b) else fock.vacuum_moment(b, pd, max_length))
    return total


# scalar blocks


def block(which: str, e: int, pd: PerronData) -> np.ndarray:
    """2x2 block on the pair (e, e°) for an edge e leaving a + vertex.

    ``which`` is one of ``A``, ``U``, ``JcC``, ``M3``, ``M4``.  The last two
    are the inverses of ``U f(A) U^T`` with ``f(a) = 2/(a(1+a))`` and
    ``f(a) = 2a/(1+a)``, evaluated by 2x2 matrix algebra.
    """
    g = pd.graph
    if g.parity[g.src[e]] < 0:
        raise ValueError(f"edge {g.edge_ids[e]!r} does not leave a + vertex")
    lam = float(pd.lam[e])
    s = float(pd.sigma[e])
    A = np.array([[0.5 * (lam + 1 / lam), -0.5j * (lam - 1 / lam)],
                  [0.5j * (lam - 1 / lam), 0.5 * (lam + 1 / lam)]])
    U = 0.5 * np.sqrt(s + 1 / s) * np.array([[1, -1j], [1, 1j]])
    if which == "A":
        return A
    if which == "U":
        return U
    eye = np.eye(2)
    if which == "JcC":
        return _clean(U @ (2 * np.linalg.inv(eye + A)) @ U.T)
    if which == "M3":
        inner = U @ (2 * np.linalg.inv(A) @ np.linalg.inv(eye + A)) @ U.T
    elif which == "M4":
        inner = U @ (2 * A @ np.linalg.inv(eye + A)) @ U.T
    else:
        raise ValueError(f"unknown block {which!r}")
    if abs(np.linalg.det(inner)) < 1e-14:
        raise ValueError("singular block")
    return _clean(np.linalg.inv(inner))


def _clean(B: np.ndarray) -> np.ndarray:
    # entries that vanish structurally come out of the inversion as rounding residue
    scale = np.max(np.abs(B))
    B = B.copy()
    B.real[np.abs(B.real) < 1e-13 * scale] = 0.0
    B.imag[np.abs(B.imag) < 1e-13 * scale] = 0.0
    return B


def block_matrix(which: str, pd: PerronData) -> np.ndarray:
    """Assemble the |E| x |E| block-diagonal matrix from the per-pair blocks."""
    g = pd.graph
    M = np.zeros((g.n_edges, g.n_edges), dtype=complex)
    for e in g.positive_edges:
        idx = (e, g.opp[e])
        B = block(which, e, pd)
        for i in range(2):
            for j in range(2):
                M[idx[i], idx[j]] = B[i, j]
    return M


# Schwinger-Dyson check for a potential


def all_words(n_edges: int, max_degree: int) -> list[Word]:
    """Every word (composable or not) of degree 0..max_degree."""
    out: list[Word] = [()]
    layer: list[Word] = [()]
    for _ in range(max_degree):
        layer = [w + (e,) for w in layer for e in range(n_edges)]
        out += layer
    return out


def sd_check(potential: WordSeries, pd: PerronData, max_degree: int = 5,
             paths_only: bool = False) -> tuple[float, tuple[int, Word]]:
    """Largest |state(D_e V . Q) - state(x)state(dQ/de)| over edges e and monomials Q.

    Q ranges over every word of degree <= max_degree, or only composable
    paths when ``paths_only`` is set.  Returns the residual and the worst (e, Q).
    """
    g = pd.graph
    grad = cyclic_gradient(potential, pd)
    if paths_only:
        words = [p for d in range(max_degree + 1) for p in enumerate_paths(g, d)]
    else:
        words = all_words(g.n_edges, max_degree)
    worst, arg = 0.0, (0, ())
    for e in range(g.n_edges):
        for q in words:
            qs = WordSeries({q: 1.0})
            lhs = 0.0 + 0.0j
            for w, c in grad[e].terms.items():
                lhs += c * fock.vacuum_moment(cat(w, q), pd)
            rhs = state_tensor(partial_e(e, qs, pd), pd)
            r = abs(lhs - rhs)
            if r > worst:
                worst, arg = r, (e, q)
    return worst, arg
