"""Command-line front end.

Every command prints a JSON report (graph hash, config echo, library
version, an ``anchor`` naming the quantity computed, and the result).
Exit codes: 0 success, 1 failed check or computation, 2 input error.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

from . import __version__, fock
from .calculus import sd_check
from .graph import GraphError, perron, read_graph
from .scenarios import ALIASES, CRITERIA, SCENARIOS, run_scenario
from .series import WordSeries, is_path, series_from_words
from .temperley_lieb import pairing_moment, trace_k, v0
from .transport import (TransportConfig, TransportError, inverse_iteration, perturbed_trace,
                        quartic_fixture, solve_transport)

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(ValueError):
    pass


def _num(c):
    c = complex(c)
    return c.real if c.imag == 0 else {"re": c.real, "im": c.imag}


def parse_series(text: str, graph, pd=None, k: int = 0) -> WordSeries:
    """A series from a JSON file, a named fixture or inline terms.

    Inline terms look like ``"2*e1 e1~ e1 e1~ + 0.5*e2 e2~"``; the fixture
    ``quartic`` (or ``quartic:EDGE``) is the rotation-averaged e e° e e°.
    """
    path = Path(text)
    if text.endswith(".json") or path.is_file():
        if not path.is_file():
            raise InputError(f"series file {text!r} not found")
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise InputError(f"series file {text!r} is not valid JSON: {exc}") from None
        x = WordSeries.from_document(doc, graph)
    elif text.startswith("quartic"):
        edge = text.partition(":")[2] or graph.edge_ids[0]
        x = quartic_fixture(pd, 1.0, graph.edge(edge))
    else:
        items: dict[str, complex] = {}
        for part in text.split("+"):
            part = part.strip()
            if not part:
                raise InputError(f"empty term in series {text!r}")
            coef, star, word = part.partition("*")
            if not star:
                coef, word = "1", part
            try:
                c = complex(coef.replace(" ", ""))
            except ValueError:
                raise InputError(f"bad coefficient {coef!r} in series {text!r}") from None
            items[word.strip()] = items.get(word.strip(), 0.0) + c
        x = series_from_words(graph, items)
        for w in x.terms:
            if not is_path(w, graph):
                raise InputError(f"term {[graph.edge_ids[e] for e in w]} is not a path")
    return WordSeries(x.terms, k=k or x.k)


def _config(args, pd) -> TransportConfig:
    overrides = {"D": args.deg, "m_max": args.m_max, "tol_fix": args.tol,
                 "k_max": args.k_max, "q_max": args.q_max}
    if args.R is not None:
        overrides["R"] = args.R
        overrides["R_prime"] = args.R + 1.0
    if args.R_prime is not None:
        overrides["R_prime"] = args.R_prime
    cfg = TransportConfig.for_graph(pd, **overrides)
    try:
        cfg.validate(pd)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    return cfg


def _report(args, graph, anchor: str, config: dict, result: dict) -> dict:
    return {
        "command": args.command,
        "anchor": anchor,
        "version": __version__,
        "graph": {"name": graph.name, "hash": graph.digest()},
        "config": config,
        "result": result,
    }


def _emit(report: dict, out: str | None) -> None:
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if out:
        Path(out).write_text(text + "\n")


def _load(args):
    graph = read_graph(args.graph)
    return graph, perron(graph)


def cmd_graph_info(args) -> int:
    graph, pd = _load(args)
    g = graph
    result = {
        "delta": pd.delta,
        "mu": {v: float(pd.mu[i]) for i, v in enumerate(g.vertex_ids)},
        "sigma": {e: float(pd.sigma[i]) for i, e in enumerate(g.edge_ids)},
        "lambda": {e: float(pd.lam[i]) for i, e in enumerate(g.edge_ids)},
        "lambda_max": float(max(pd.lam)),
        "lambda_at_most_delta": bool(all(pd.lam <= pd.delta * (1 + 1e-12))),
        "eigen_residual": pd.residual(),
        "n_edges": g.n_edges,
        "n_vertices_plus": sum(p > 0 for p in g.parity),
        "n_vertices_minus": sum(p < 0 for p in g.parity),
    }
    _emit(_report(args, graph, "Perron-Frobenius eigenvalue and eigenvector of the adjacency matrix",
                  {}, result), args.report)
    return EXIT_OK


def cmd_verify(args) -> int:
    names = list(CRITERIA.values()) if args.scenario == "all" else [args.scenario]
    checks = []
    for name in names:
        options = {}
        if ALIASES.get(name, name) == "transport-small-t" and args.t is not None:
            options["t"] = args.t
        checks += run_scenario(name, graphs=args.graph, seed=args.seed, **options)
    for c in checks:
        print(c.line(), file=sys.stderr)
    ok = all(c.passed for c in checks)
    report = {
        "command": "verify",
        "anchor": "acceptance scenario " + args.scenario,
        "version": __version__,
        "config": {"scenario": args.scenario, "graphs": args.graph, "seed": args.seed, "t": args.t},
        "result": {"passed": ok, "checks": [c.as_dict() for c in checks]},
    }
    _emit(report, args.report)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_transport(args) -> int:
    graph, pd = _load(args)
    cfg = _config(args, pd)
    w = parse_series(args.w, graph, pd) * args.t
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = solve_transport(w, cfg, pd, with_residual=not args.no_residual)
    result = {
        "g": res.g.to_document(graph),
        "g_hat": res.g_hat.to_document(graph),
        "iterations": res.iterations,
        "delta_history": [float(d) for d in res.delta_history],
        "m_tail_bound": res.m_tail_bound,
        "xi": res.xi,
        "xi_full": res.xi_full,
        "sd_residual": res.sd_residual,
        "norm_g": res.norm_g,
        "norm_w": res.norm_w,
        "adjoint_defect": res.adjoint_defect,
        "excursions": res.excursions,
    }
    _emit(_report(args, graph, "fixed point of the transport map and its Schwinger-Dyson defect",
                  {**cfg.as_dict(), "t": args.t, "w": args.w}, result), args.report)
    return EXIT_OK


def cmd_invert(args) -> int:
    graph, pd = _load(args)
    cfg = _config(args, pd)
    w = parse_series(args.w, graph, pd) * args.t
    x = parse_series(args.x, graph, pd)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = solve_transport(w, cfg, pd, with_residual=False)
    rep = inverse_iteration(res.g, x, cfg, pd, n_iter=args.iters)
    result = {"distances": rep.distances, "ratios": rep.ratios,
              "final": rep.iterates[-1].to_document(graph)}
    _emit(_report(args, graph, "inverse of the transport substitution by fixed-point iteration",
                  {**cfg.as_dict(), "t": args.t, "w": args.w, "x": args.x, "iters": args.iters},
                  result), args.report)
    return EXIT_OK


def cmd_trace(args) -> int:
    graph, pd = _load(args)
    x = parse_series(args.x, graph, pd, k=args.k)
    config = {"x": args.x, "k": args.k}
    if args.w:
        cfg = _config(args, pd)
        w = parse_series(args.w, graph, pd) * args.t
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            g = solve_transport(w, cfg, pd, with_residual=False).g
        by_vertex = perturbed_trace(x, g, cfg, pd, by_vertex=True)
        config.update(cfg.as_dict(), w=args.w, t=args.t)
        anchor = "perturbed trace: the vacuum state after the transport substitution"
    else:
        by_vertex = trace_k(x, pd)
        anchor = "vertex-valued pairing trace"
    result = {"by_vertex": {graph.vertex_ids[v]: _num(c) for v, c in by_vertex.items()},
              "total": _num(sum(by_vertex.values()))}
    _emit(_report(args, graph, anchor, config, result), args.report)
    return EXIT_OK


def cmd_moment(args) -> int:
    graph, pd = _load(args)
    try:
        word = tuple(graph.edge(e) for e in args.word.split())
    except GraphError as exc:
        raise InputError(str(exc)) from None
    if not is_path(word, graph):
        raise InputError(f"word {args.word!r} is not a path")
    pair = pairing_moment(word, pd)
    vac = fock.vacuum_moment(word, pd, max_length=max(fock.DEFAULT_MAX_LENGTH, len(word)))
    result = {"pairing_sum": pair, "vacuum_moment": _num(vac), "deviation": abs(pair - vac)}
    _emit(_report(args, graph, "pairing sum of a loop against its vacuum moment", {"word": args.word},
                  result), args.report)
    return EXIT_OK


def cmd_phik(args) -> int:
    graph, pd = _load(args)
    x = parse_series(args.x, graph, pd, k=args.k)
    value = fock.phi_k(x, pd)
    result = {"phi_k": _num(value)}
    if args.k >= 1:
        result["trace_k"] = _num(sum(trace_k(x, pd).values()))
    _emit(_report(args, graph, "grading-k state on the Fock space", {"x": args.x, "k": args.k}, result),
          args.report)
    return EXIT_OK


def cmd_sd_check(args) -> int:
    graph, pd = _load(args)
    potential = v0(pd)
    if args.potential:
        potential = potential + parse_series(args.potential, graph, pd)
    res, (e, q) = sd_check(potential, pd, max_degree=args.degree, paths_only=args.paths_only)
    ok = res <= args.tol
    result = {"residual": res, "passed": ok, "worst_edge": graph.edge_ids[e],
              "worst_word": [graph.edge_ids[f] for f in q]}
    _emit(_report(args, graph, "Schwinger-Dyson defect of the vacuum state for a potential",
                  {"degree": args.degree, "potential": args.potential, "tol": args.tol,
                   "paths_only": args.paths_only}, result), args.report)
    return EXIT_OK if ok else EXIT_FAIL


def _transport_flags(p) -> None:
    p.add_argument("--t", type=float, default=1.0, help="scale applied to the perturbation")
    p.add_argument("--deg", type=int, default=8, help="truncation degree D")
    p.add_argument("--m-max", dest="m_max", type=int, default=40)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--k-max", dest="k_max", type=int, default=100)
    p.add_argument("--q-max", dest="q_max", type=int, default=4)
    p.add_argument("--R", type=float, default=None)
    p.add_argument("--R-prime", dest="R_prime", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="freetransport", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, func, help_text, graph=True):
        p = sub.add_parser(name, help=help_text)
        if graph:
            p.add_argument("--graph", required=True, help="bundled graph name or JSON file")
        p.add_argument("--report", default=None, help="also write the JSON report here")
        p.set_defaults(func=func)
        return p

    command("graph-info", cmd_graph_info, "Perron-Frobenius data of a graph")

    p = command("verify", cmd_verify, "run a named acceptance scenario", graph=False)
    p.add_argument("scenario", choices=sorted(SCENARIOS) + sorted(ALIASES) + ["all"])
    p.add_argument("--graph", action="append", default=None, help="restrict to these graphs (repeatable)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--t", type=float, default=None, help="perturbation size for the transport scenario")

    p = command("transport", cmd_transport, "solve for the transport element")
    p.add_argument("--w", required=True, help="perturbation: JSON file, 'quartic[:EDGE]' or inline terms")
    p.add_argument("--no-residual", action="store_true")
    _transport_flags(p)

    p = command("invert", cmd_invert, "inverse iteration for the transport substitution")
    p.add_argument("--w", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--iters", type=int, default=20)
    _transport_flags(p)

    p = command("trace", cmd_trace, "vertex-valued trace, optionally after transport")
    p.add_argument("--x", required=True)
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--w", default=None)
    _transport_flags(p)

    p = command("moment", cmd_moment, "pairing sum and vacuum moment of one loop")
    p.add_argument("--word", required=True, help="space-separated edge ids")

    p = command("phik", cmd_phik, "grading-k state of a series")
    p.add_argument("--x", required=True)
    p.add_argument("--k", type=int, default=0)

    p = command("sd-check", cmd_sd_check, "Schwinger-Dyson check for v0 plus a potential")
    p.add_argument("--potential", default=None)
    p.add_argument("--degree", type=int, default=5)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--paths-only", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (GraphError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        # malformed series documents and out-of-range options surface here
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except TransportError as exc:
        print(f"transport failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
