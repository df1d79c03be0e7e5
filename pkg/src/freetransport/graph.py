"""Finite bipartite graphs and their Perron-Frobenius data.

Edges are stored as integers ``0..n_edges-1``; every edge has an opposite
``opp[e]`` running the other way.  Vertex and edge names are kept only for
input/output.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np


class GraphError(ValueError):
    """Raised for malformed or invalid graph documents."""


@dataclass(frozen=True)
class BipartiteGraph:
    name: str
    vertex_ids: tuple[str, ...]
    parity: tuple[int, ...]  # +1 or -1 per vertex
    edge_ids: tuple[str, ...]
    src: tuple[int, ...]
    dst: tuple[int, ...]
    opp: tuple[int, ...]
    _vindex: dict = field(init=False, repr=False, compare=False)
    _eindex: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_vindex", {v: i for i, v in enumerate(self.vertex_ids)})
        object.__setattr__(self, "_eindex", {e: i for i, e in enumerate(self.edge_ids)})

    @property
    def n_vertices(self) -> int:
        return len(self.vertex_ids)

    @property
    def n_edges(self) -> int:
        return len(self.edge_ids)

    def vertex(self, vid: str) -> int:
        try:
            return self._vindex[vid]
        except KeyError:
            raise GraphError(f"unknown vertex {vid!r}") from None

    def edge(self, eid: str) -> int:
        try:
            return self._eindex[eid]
        except KeyError:
            raise GraphError(f"unknown edge {eid!r}") from None

    @property
    def positive_edges(self) -> list[int]:
        """Edges leaving a + vertex, in index order."""
        return [e for e in range(self.n_edges) if self.parity[self.src[e]] > 0]

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.n_vertices, self.n_vertices))
        for e in range(self.n_edges):
            A[self.src[e], self.dst[e]] += 1.0
        return A

    def out_edges(self, v: int) -> list[int]:
        return [e for e in range(self.n_edges) if self.src[e] == v]

    def in_edges(self, v: int) -> list[int]:
        return [e for e in range(self.n_edges) if self.dst[e] == v]

    def to_document(self) -> dict:
        return {
            "name": self.name,
            "vertices": [
                {"id": v, "parity": "+" if p > 0 else "-"}
                for v, p in zip(self.vertex_ids, self.parity)
            ],
            "edges": [
                {"id": self.edge_ids[e], "src": self.vertex_ids[self.src[e]],
                 "dst": self.vertex_ids[self.dst[e]], "opposite": self.edge_ids[self.opp[e]]}
                for e in range(self.n_edges)
            ],
        }

    def digest(self) -> str:
        blob = json.dumps(self.to_document(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def load_graph(doc: dict) -> BipartiteGraph:
    """Build and validate a graph from a JSON-shaped document.

    Edges without an ``"opposite"`` key are treated as undirected: the listed
    orientation keeps its id and the reverse is named ``"<id>~"``.  Edges with
    ``"opposite"`` are taken as given and must form an involution.
    """
    if not isinstance(doc, dict) or "vertices" not in doc or "edges" not in doc:
        raise GraphError("graph document needs 'vertices' and 'edges'")
    vertex_ids, parity = [], []
    for item in doc["vertices"]:
        vid = str(item["id"])
        if vid in vertex_ids:
            raise GraphError(f"duplicate vertex {vid!r}")
        p = item.get("parity")
        if p not in ("+", "-"):
            raise GraphError(f"vertex {vid!r} has parity {p!r}, expected '+' or '-'")
        vertex_ids.append(vid)
        parity.append(1 if p == "+" else -1)
    vindex = {v: i for i, v in enumerate(vertex_ids)}

    raw = []
    for item in doc["edges"]:
        eid = str(item["id"])
        for key in ("src", "dst"):
            if item.get(key) not in vindex:
                raise GraphError(f"edge {eid!r} references unknown vertex {item.get(key)!r}")
        raw.append((eid, vindex[item["src"]], vindex[item["dst"]], item.get("opposite")))

    directed = any(r[3] is not None for r in raw)
    edge_ids, src, dst = [], [], []
    if directed:
        for eid, s, t, _ in raw:
            edge_ids.append(eid)
            src.append(s)
            dst.append(t)
    else:
        for eid, s, t, _ in raw:
            edge_ids += [eid, eid + "~"]
            src += [s, t]
            dst += [t, s]
    if len(set(edge_ids)) != len(edge_ids):
        raise GraphError("duplicate edge ids")
    eindex = {e: i for i, e in enumerate(edge_ids)}

    if directed:
        opp = []
        for eid, s, t, o in raw:
            if o not in eindex:
                raise GraphError(f"edge {eid!r} has missing opposite {o!r}")
            opp.append(eindex[o])
    else:
        opp = [i ^ 1 for i in range(len(edge_ids))]

    for e, eid in enumerate(edge_ids):
        if parity[src[e]] == parity[dst[e]]:
            raise GraphError(f"edge {eid!r} joins two vertices of the same parity")
        o = opp[e]
        if opp[o] != e or src[o] != dst[e] or dst[o] != src[e] or o == e:
            raise GraphError(f"edge {eid!r} breaks the opposite-edge involution")

    n = len(vertex_ids)
    if n == 0:
        raise GraphError("graph has no vertices")
    seen, stack = {0}, [0]
    while stack:
        v = stack.pop()
        for e in range(len(edge_ids)):
            if src[e] == v and dst[e] not in seen:
                seen.add(dst[e])
                stack.append(dst[e])
    if len(seen) != n:
        lost = next(vertex_ids[v] for v in range(n) if v not in seen)
        raise GraphError(f"graph is disconnected: vertex {lost!r} is unreachable")

    return BipartiteGraph(
        name=str(doc.get("name", "graph")),
        vertex_ids=tuple(vertex_ids),
        parity=tuple(parity),
        edge_ids=tuple(edge_ids),
        src=tuple(src),
        dst=tuple(dst),
        opp=tuple(opp),
    )


BUNDLED = ("A2", "A3", "A4", "A5", "D4")


def bundled_graph(name: str) -> BipartiteGraph:
    if name not in BUNDLED:
        raise GraphError(f"no bundled graph {name!r}; choose from {', '.join(BUNDLED)}")
    text = resources.files("freetransport.data").joinpath(f"{name}.json").read_text()
    return load_graph(json.loads(text))


def read_graph(source: str) -> BipartiteGraph:
    """Load a bundled graph by name or a graph document from a file path."""
    if source in BUNDLED:
        return bundled_graph(source)
    path = Path(source)
    if not path.exists():
        raise GraphError(f"graph file {source!r} not found")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise GraphError(f"graph file {source!r} is not valid JSON: {exc}") from None
    return load_graph(doc)


class PerronData:
    """Perron-Frobenius eigenvalue, eigenvector and edge weights of a graph.

    ``mu`` is normalised so its largest entry is 1.  ``sigma[e]`` is
    ``sqrt(mu[dst]/mu[src])`` and ``lam[e] = sigma[e]**2``.
    """

    def __init__(self, graph: BipartiteGraph, delta: float, mu: np.ndarray):
        self.graph = graph
        self.delta = float(delta)
        self.mu = np.asarray(mu, dtype=float)
        g = graph
        self.sigma = np.array([np.sqrt(self.mu[g.dst[e]] / self.mu[g.src[e]]) for e in range(g.n_edges)])
        self.lam = self.sigma**2
        # memo tables keyed by word, filled by the moment evaluators
        self.cache: dict = {}

    def residual(self) -> float:
        A = self.graph.adjacency()
        return float(np.max(np.abs(A @ self.mu - self.delta * self.mu)))

    def sigma_of(self, eid: str) -> float:
        return float(self.sigma[self.graph.edge(eid)])

    def mu_of(self, vid: str) -> float:
        return float(self.mu[self.graph.vertex(vid)])


def perron(graph: BipartiteGraph, tol: float = 1e-13, max_iter: int = 1_000_000) -> PerronData:
    """Power iteration on the squared adjacency matrix from the all-ones vector.

    The square has the two parity classes as invariant blocks, so the
    iteration is run to convergence and the odd-parity half is then rebuilt
    as ``A mu_plus / delta``, which fixes the relative scale of the blocks.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    A = graph.adjacency()
    A2 = A @ A
    x = np.ones(graph.n_vertices)
    rq_old = np.inf
    for _ in range(max_iter):
        y = A2 @ x
        rq = float(x @ y / (x @ x))
        y /= np.max(y)
        step = float(np.max(np.abs(y - x)))
        x = y
        if abs(rq - rq_old) < tol * max(rq, 1.0) and step < tol:
            break
        rq_old = rq
    else:
        raise RuntimeError(f"power iteration did not converge in {max_iter} steps")
    delta = float(np.sqrt(rq))
    plus = np.array([p > 0 for p in graph.parity])
    mu = np.where(plus, x, 0.0)
    mu = mu + np.where(plus, 0.0, (A @ mu) / delta)
    mu /= np.max(mu)
    return PerronData(graph, delta, mu)
