"""Free transport from the quadratic potential to a small perturbation of it.

Given a perturbation ``w`` the solver looks for a rotation-symmetric series
``g`` such that, with ``Y_e = C_e + D_e g``, the vacuum state satisfies the
Schwinger-Dyson equation of the potential ``v0 + w`` in the variables ``Y``.
``g`` is obtained as ``Sigma(G)`` where ``G`` is the fixed point of
``G -> S Pi F(G)``, everything truncated at a fixed word degree.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

from . import fock
from .calculus import (SeriesMatrix, all_words, block_matrix, contract_left,
                       contract_right, cyclic_gradient, hash_compose, identity_tuple, jacobian,
                       partial_e, trace_matrix)
from .graph import PerronData
from .series import (WordSeries, Word, _word_weight, degree, free_product, involution,
                     is_empty, is_loop, letter_weights, norm_R_sigma, sigma_inv_map,
                     substitute, symmetrize)


class TransportError(RuntimeError):
    """The fixed-point iteration left its reliable regime."""


@dataclass
class TransportConfig:
    R: float
    R_prime: float
    D: int = 8
    m_max: int = 40
    tol_fix: float = 1e-12
    k_max: int = 100
    q_max: int = 4
    # total leg degree kept inside the logarithm series; None means 2*D
    contract_degree: int | None = None

    @classmethod
    def for_graph(cls, pd: PerronData, **overrides) -> "TransportConfig":
        R = 4.0 * math.sqrt(pd.delta)
        base = {"R": R, "R_prime": R + 1.0}
        base.update(overrides)
        return cls(**base)

    def validate(self, pd: PerronData) -> None:
        if not self.R >= 4.0 * math.sqrt(pd.delta) - 1e-12:
            raise ValueError(f"R = {self.R} is below 4*sqrt(delta) = {4 * math.sqrt(pd.delta)}")
        if not self.R_prime > self.R:
            raise ValueError("R_prime must exceed R")
        if self.D < 4 or self.D % 2:
            raise ValueError("D must be even and at least 4")
        if self.m_max < 1:
            raise ValueError("m_max must be at least 1")
        if self.tol_fix <= 0:
            raise ValueError("tol_fix must be positive")

    @property
    def inner_degree(self) -> int:
        return self.contract_degree if self.contract_degree is not None else 2 * self.D

    def as_dict(self) -> dict:
        return {"R": self.R, "R_prime": self.R_prime, "D": self.D, "m_max": self.m_max,
                "tol_fix": self.tol_fix, "k_max": self.k_max, "q_max": self.q_max,
                "contract_degree": self.inner_degree}


@dataclass
class TransportResult:
    g: WordSeries
    g_hat: WordSeries
    iterations: int
    delta_history: list[float]
    m_tail_bound: float
    xi: float
    sd_residual: float | None
    norm_g: float
    norm_w: float
    xi_full: float = 0.0
    adjoint_defect: float = 0.0
    excursions: list[int] = field(default_factory=list)


def _gradient_images(g: WordSeries, pd: PerronData, D: int | None) -> dict[int, WordSeries]:
    """e -> C_e + D_e g, truncated."""
    grad = cyclic_gradient(g, pd)
    out = {}
    for e in range(pd.graph.n_edges):
        img = WordSeries({(e,): 1.0}) + grad[e]
        out[e] = img.truncate(D)
    return out


def matrix_norm_proxy(M: SeriesMatrix, R: float, pd: PerronData) -> float:
    """Largest row sum of the R-weighted coefficient norms of the entries."""
    weights = letter_weights(R, pd)
    rows: dict[int, float] = {}
    for (i, _), t in M.entries.items():
        s = sum(abs(c) * _word_weight(a, weights) * _word_weight(b, weights) for (a, b), c in t.terms.items())
        rows[i] = rows.get(i, 0.0) + s
    return max(rows.values(), default=0.0)


def scalar_part_norm(M: SeriesMatrix) -> float:
    """Largest row sum of the degree-0 coefficients; the part of M the degree cap never kills."""
    rows: dict[int, float] = {}
    for (i, _), t in M.entries.items():
        s = sum(abs(c) for (a, b), c in t.terms.items() if degree(a) == 0 and degree(b) == 0)
        rows[i] = rows.get(i, 0.0) + s
    return max(rows.values(), default=0.0)


def map_F(G: WordSeries, w: WordSeries, cfg: TransportConfig, pd: PerronData) -> tuple[WordSeries, dict]:
    """One application of the transport map to the degree-weighted unknown G.

    Returns ``F(G)`` truncated at ``cfg.D`` and a dict with the norm proxy
    ``xi`` of the logarithm series, the number of terms used and the tail bound.
    """
    D = cfg.D
    g = pd.graph
    if norm_R_sigma(G, cfg.R_prime, pd) > 1.0:
        warnings.warn("transport iterate has left the unit ball of the R'-norm", RuntimeWarning)
    info = {"xi": 0.0, "xi_full": 0.0, "m_used": 0, "tail_bound": 0.0}
    if not G:
        return (-1.0) * w.truncate(D), info

    SG = sigma_inv_map(G)
    grad = cyclic_gradient(SG, pd)
    images = {e: (WordSeries({(e,): 1.0}) + grad[e]).truncate(D) for e in range(g.n_edges)}
    out = (-1.0) * substitute(w, images, D)

    quad: dict = {}
    for e in range(g.n_edges):
        prod = free_product(grad[e], grad[g.opp[e]], trunc=D)
        for word, c in prod.terms.items():
            quad[word] = quad.get(word, 0.0) - 0.5 * pd.sigma[e] * c
    out = out + WordSeries(quad)

    T = cfg.inner_degree
    J = jacobian(grad, pd)
    JcC = SeriesMatrix.from_scalars(block_matrix("JcC", pd))
    K = hash_compose(JcC, J, T)
    P3 = hash_compose(SeriesMatrix.from_scalars(block_matrix("M3", pd)), J, T)
    P4 = hash_compose(SeriesMatrix.from_scalars(block_matrix("M4", pd)), J, T)
    # positive-degree parts of K die after D compositions; only its scalar part
    # survives, so the series is cut at min(m_max, D) terms and the scalar tail bounded
    xi = scalar_part_norm(K)
    info["xi"] = xi
    info["xi_full"] = matrix_norm_proxy(K, cfg.R, pd)
    m_sum = min(cfg.m_max, D)

    log_terms: dict = {}
    m = 0
    for m in range(1, m_sum + 1):
        if not P3.entries and not P4.entries:
            m -= 1
            break
        coef = (-1) ** (m + 1) / m
        left = contract_left(trace_matrix(P3), pd, max_length=T)
        right = contract_right(trace_matrix(P4), pd, max_length=T)
        for part in (left, right):
            for word, c in part.terms.items():
                if degree(word) <= D:
                    log_terms[word] = log_terms.get(word, 0.0) + coef * c
        if m < m_sum:
            P3 = hash_compose(P3, K, T)
            P4 = hash_compose(P4, K, T)
    else:
        if xi > 0.0:
            if xi >= 1.0:
                raise TransportError(f"logarithm series proxy xi = {xi:.3g} >= 1; perturbation too large")
            info["tail_bound"] = xi ** (m + 1) / ((m + 1) * (1 - xi))
    info["m_used"] = m
    out = out + WordSeries(log_terms)
    return out.truncate(D), info


def check_perturbation(w: WordSeries, pd: PerronData) -> WordSeries:
    """Symmetrize w and check it has no constant or quadratic part and is loop supported."""
    for word in w.terms:
        if degree(word) in (0, 2):
            raise ValueError("perturbation must have no degree-0 or degree-2 component")
        if not is_loop(word, pd.graph):
            raise ValueError(f"perturbation word {word} is not a loop")
    return symmetrize(w, pd)


def solve_transport(w: WordSeries, cfg: TransportConfig, pd: PerronData,
                    with_residual: bool = True) -> TransportResult:
    """Iterate G_0 = w, G_{k+1} = S Pi F(G_k) and return g = Sigma(G)."""
    cfg.validate(pd)
    w = check_perturbation(w, pd).truncate(cfg.D)
    norm_w = norm_R_sigma(w, cfg.R_prime + 1.0, pd)
    if not w:
        zero = WordSeries()
        return TransportResult(zero, zero, 0, [], 0.0, 0.0, 0.0 if with_residual else None, 0.0, 0.0)
    G = w
    history: list[float] = []
    excursions: list[int] = []
    adjoint = 0.0
    info = {"xi": 0.0, "xi_full": 0.0, "tail_bound": 0.0}
    for it in range(1, cfg.k_max + 1):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            Fv, info = map_F(G, w, cfg, pd)
        if caught:
            excursions.append(it)
        G_new = symmetrize(Fv.drop_constants(), pd)
        adjoint = max(adjoint, involution(G_new, pd.graph).distance(G_new))
        step = norm_R_sigma(G_new - G, cfg.R_prime, pd)
        history.append(step)
        G = G_new
        if step < cfg.tol_fix:
            break
    else:
        raise TransportError(f"no convergence in {cfg.k_max} iterations; last steps {history[-3:]}")
    g_series = sigma_inv_map(G)
    res = sd_residual(g_series, w, cfg, pd) if with_residual else None
    return TransportResult(
        g=g_series, g_hat=G, iterations=len(history), delta_history=history,
        m_tail_bound=info["tail_bound"], xi=info["xi"], sd_residual=res, xi_full=info["xi_full"],
        norm_g=norm_R_sigma(g_series, cfg.R_prime, pd), norm_w=norm_w,
        adjoint_defect=adjoint, excursions=excursions,
    )


def quartic_fixture(pd: PerronData, t: float = 1.0, edge: int = 0) -> WordSeries:
    """t * S(e e° e e°) for the given edge; self-adjoint and loop supported."""
    o = pd.graph.opp[edge]
    return symmetrize(WordSeries({(edge, o, edge, o): t}), pd)


def eta(x: WordSeries, g: WordSeries, cfg: TransportConfig, pd: PerronData) -> WordSeries:
    """Evaluate x at C + D g."""
    if not g:
        return WordSeries(x.terms, k=x.k)
    return substitute(x, _gradient_images(g, pd, cfg.D), cfg.D, pd.graph)


def perturbed_trace(x: WordSeries, g: WordSeries, cfg: TransportConfig, pd: PerronData,
                    by_vertex: bool = False):
    """State of eta(x); with ``by_vertex`` the value split by base vertex."""
    y = eta(x, g, cfg, pd)
    if not by_vertex:
        return fock.state(y, pd, max_length=max(fock.DEFAULT_MAX_LENGTH, cfg.D))
    graph = pd.graph
    out = {v: 0.0 + 0.0j for v in range(graph.n_vertices)}
    for word, c in y.terms.items():
        if word == ():
            for v in out:
                out[v] += c
        elif is_empty(word):
            out[~word[0]] += c
        else:
            v = graph.src[word[0]]
            out[v] += c * fock.phi_v(word, v, pd, max_length=max(fock.DEFAULT_MAX_LENGTH, cfg.D))
    return out


class _Evaluator:
    """Substitutes words into Y = C + D g and takes states, with memoisation."""

    def __init__(self, images: dict[int, WordSeries], cap: int, pd: PerronData):
        self.images = images
        self.cap = cap
        self.pd = pd
        self._sub: dict[Word, WordSeries] = {}
        self._state: dict[Word, complex] = {}

    def sub(self, word: Word) -> WordSeries:
        hit = self._sub.get(word)
        if hit is None:
            hit = substitute(WordSeries({word: 1.0}), self.images, self.cap)
            self._sub[word] = hit
        return hit

    def state_of_word(self, word: Word) -> complex:
        if is_empty(word):
            return 1.0
        hit = self._state.get(word)
        if hit is None:
            hit = fock.state(self.sub(word), self.pd, max_length=self.cap)
            self._state[word] = hit
        return hit

    def state_product(self, x: WordSeries, word: Word) -> complex:
        """State of x(Y) * word(Y)."""
        right = self.sub(word) if not is_empty(word) else WordSeries.unit()
        left = substitute(x, self.images, self.cap)
        return fock.state(free_product(left, right, self.cap), self.pd, max_length=self.cap)


def sd_residual(g: WordSeries, w: WordSeries, cfg: TransportConfig, pd: PerronData,
                words: list[Word] | None = None, return_worst: bool = False):
    """Largest Schwinger-Dyson defect of the potential v0 + w for the variables C + D g.

    For each edge e and monomial Q (default: all words of degree <= q_max)
    evaluates ``state(Y_e Q(Y)) - state(x)state(d_e Q (Y)) + state(D_e w (Y) Q(Y))``.
    Products are kept up to degree ``min(16, D + q_max + 2)``.
    """
    graph = pd.graph
    cap = min(fock.DEFAULT_MAX_LENGTH, cfg.D + cfg.q_max + 2)
    images = _gradient_images(g, pd, cap)
    ev = _Evaluator(images, cap, pd)
    grad_w = cyclic_gradient(w, pd)
    if words is None:
        words = all_words(graph.n_edges, cfg.q_max)
    worst, arg = 0.0, None
    for e in range(graph.n_edges):
        y_e = WordSeries({(e,): 1.0})
        for q in words:
            lhs = ev.state_product(y_e, q)
            rhs = 0.0 + 0.0j
            for (a, b), c in partial_e(e, WordSeries({q: 1.0}), pd).terms.items():
                sa = ev.state_of_word(a)
                if sa:
                    rhs += c * sa * ev.state_of_word(b)
            wterm = ev.state_product(grad_w[e], q) if grad_w[e] else 0.0
            r = abs(lhs - rhs + wterm)
            if r > worst:
                worst, arg = r, (e, q)
    return (worst, arg) if return_worst else worst


def l_map(H: dict[int, WordSeries], pd: PerronData) -> WordSeries:
    """sum_e sigma(e) H_e C_{e°}."""
    g = pd.graph
    out = WordSeries()
    for e, h in H.items():
        out = out + free_product(h, WordSeries({(g.opp[e],): 1.0})) * pd.sigma[e]
    return out


@dataclass
class InverseReport:
    distances: list[float]
    ratios: list[float]
    iterates: list[WordSeries]


def inverse_iteration(g: WordSeries, x: WordSeries, cfg: TransportConfig, pd: PerronData,
                      n_iter: int = 20, floor: float = 1e-14) -> InverseReport:
    """Build H_0 = C, H_{k+1} = C - f(H_k) with f = D g, and measure eta(x(H_k)) against x.

    Stops early once the distance falls below ``floor``; raises if the
    distance grows three steps in a row.
    """
    graph = pd.graph
    D = cfg.D
    f = {e: s.truncate(D) for e, s in cyclic_gradient(g, pd).items()}
    H = identity_tuple(pd)
    distances: list[float] = []
    iterates: list[WordSeries] = []
    rises = 0
    for _ in range(n_iter):
        xk = substitute(x, H, D)
        for word in xk.terms:
            if not is_empty(word) and not is_loop(word, graph):
                raise AssertionError(f"inverse iterate left the loop space at {word}")
        iterates.append(xk)
        dist = eta(xk, g, cfg, pd).distance(x)
        if distances and dist > distances[-1]:
            rises += 1
            if rises >= 3:
                raise TransportError(f"inverse iteration diverges: {distances + [dist]}")
        else:
            rises = 0
        distances.append(dist)
        if dist < floor:
            break
        H = {e: (WordSeries({(e,): 1.0}) - substitute(f[e], H, D)).truncate(D) for e in range(graph.n_edges)}
    ratios = [b / a for a, b in zip(distances, distances[1:]) if a > 0]
    return InverseReport(distances, ratios, iterates)


__all__ = [
    "TransportConfig", "TransportResult", "TransportError", "map_F", "solve_transport",
    "eta", "perturbed_trace", "sd_residual", "l_map", "inverse_iteration", "quartic_fixture",
    "check_perturbation", "matrix_norm_proxy", "scalar_part_norm",
]
