"""Command-line front door.

Subcommands: solve, sparsify, path-sparsify, ultrasparsify, verify,
decompose, and bench.  Every JSON report embeds a RunManifest (inputs,
seed, config overrides, outputs) so a run is reproducible from its
report alone, plus both the effective and the asymptotic constant sets.

Exit codes: 0 success, 2 input/parse error, 3 numerical or degeneracy
error.
"""

import argparse
import csv
import dataclasses
import json
import math
import sys
import time

import numpy as np

from . import __version__
from .config import SolverConfig, config_report
from .graph import (WeightedMultiGraph, build_graph, read_graph, read_vector,
                    write_edgelist, write_vector)
from .decompose import decompose
from .pathsparsify import (DegenerateInput, path_sparsify,
                           verify_path_sparsifier)
from .spectral_subgraph import spectral_subgraph
from .solvers import SolveReport, cg_solve, named_rng, recursive_solver
from .ultrasparsify import NumericalFailure, ultrasparsify
from . import oracle

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


def _manifest(args, outputs):
    return {
        "subcommand": args.command,
        "input": getattr(args, "graph", None),
        "config_overrides": dict(kv.split("=", 1) for kv in (args.config or [])),
        "seed": getattr(args, "seed", None),
        "outputs": outputs,
        "tool_version": __version__,
    }


def _build_config(args):
    cfg = SolverConfig()
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "p", None) is not None:
        cfg.p = args.p
    if getattr(args, "eps", None) is not None:
        cfg.epsilon = args.eps
    fields = {f.name: f.type for f in dataclasses.fields(SolverConfig)}
    for kv in args.config or []:
        if "=" not in kv:
            raise ValueError(f"--config expects KEY=VAL, got {kv!r}")
        key, val = kv.split("=", 1)
        if key not in fields:
            raise ValueError(f"unknown config key {key!r}")
        cur = getattr(cfg, key)
        if isinstance(cur, bool):
            setattr(cfg, key, val.lower() in ("1", "true", "yes"))
        elif isinstance(cur, int):
            setattr(cfg, key, int(val))
        else:
            setattr(cfg, key, float(val))
    return cfg


def _write_report(path, args, cfg, outputs, payload):
    report = {"manifest": _manifest(args, outputs),
              "config": config_report(cfg)}
    report.update(payload)
    with open(path, "w") as f:
        json.dump(report, f, indent=2, sort_keys=True)
        f.write("\n")


def _load_graph(args):
    return read_graph(args.graph, args.format)


def _relative_a_error(G, x, xstar):
    num = oracle.a_norm_error(G, x, xstar)
    den = float(np.asarray(xstar) @ (G.laplacian() @ np.asarray(xstar)))
    return math.sqrt(num / den) if den > 0 else math.sqrt(num)


def _reference_solution(G, b):
    """Exact solve by grounding vertex 0 of each component (sparse LU)."""
    import scipy.sparse as sp
    import scipy.sparse.linalg as spla
    b = oracle.project_to_range(G, b)
    ncomp, labels = G.components()
    ground = [int(np.nonzero(labels == c)[0][0]) for c in range(ncomp)]
    L = sp.csc_matrix(G.laplacian(), copy=True).tolil()
    for g in ground:
        L[g, :] = 0.0
        L[g, g] = 1.0
    bb = b.copy()
    bb[ground] = 0.0
    x = spla.spsolve(L.tocsc(), bb)
    return oracle.project_to_range(G, x)


def cmd_solve(args):
    G = _load_graph(args)
    b = read_vector(args.rhs)
    if len(b) != G.n:
        raise ValueError(f"rhs has {len(b)} entries, graph has {G.n} vertices")
    cfg = _build_config(args)
    report = SolveReport()
    rng = named_rng(cfg.seed, "solve")
    x = recursive_solver(G, b, cfg.epsilon, cfg, rng, report)
    out = args.out or "solution.txt"
    write_vector(x, out)
    payload = {"solve": report.to_dict(), "n": G.n, "m": G.m,
               "epsilon": cfg.epsilon}
    xstar = _reference_solution(G, b)
    payload["final_error"] = _relative_a_error(G, x, xstar)
    _write_report(args.report, args, cfg, [out, args.report], payload)
    return EXIT_OK


def cmd_sparsify(args):
    G = _load_graph(args)
    cfg = _build_config(args)
    k = args.k or max(2, int(cfg.c_spars * math.log(max(G.n, 3)) ** 2))
    ps_rng = named_rng(cfg.seed, "cli", "pathsparsify")
    fn = lambda g: path_sparsify(g, max(2, k), ps_rng, cfg)[0]
    D = spectral_subgraph(G, k, cfg.p, fn, named_rng(cfg.seed, "cli", "subgraph"),
                          cfg)
    out = args.out or "subgraph.edgelist"
    write_edgelist(D.subgraph(G), out)
    tau_out = args.tau_out or "tau.csv"
    with open(tau_out, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["edge_id", "u", "v", "w", "tau"])
        for e in range(G.m):
            w.writerow([e, int(G.us[e]), int(G.vs[e]),
                        repr(float(G.ws[e])), repr(float(D.tau[e]))])
    stats = {key: val for key, val in D.stats.items() if key != "telemetry"}
    payload = {"k": k, "p": cfg.p, "kappa_measured": D.kappa_measured,
               "retained_edges": len(D.H), "stats": stats,
               "telemetry": D.stats.get("telemetry", [])}
    _write_report(args.report, args, cfg, [out, tau_out, args.report], payload)
    return EXIT_OK


def cmd_path_sparsify(args):
    G = _load_graph(args)
    cfg = _build_config(args)
    k = args.k or 4
    F, info = path_sparsify(G, k, named_rng(cfg.seed, "cli", "path"), cfg)
    out = args.out or "retained.edgelist"
    from .graph import edge_subgraph
    write_edgelist(edge_subgraph(G, sorted(F)), out)
    payload = {"k": k, "retained_edges": len(F), "report": info}
    if args.check and G.n <= cfg.oracle_cap:
        claims = info.get("claims", [])
        alpha = min((c["alpha"] for c in claims), default=float("inf"))
        beta = max((c["beta"] for c in claims), default=1.0)
        payload["verification"] = verify_path_sparsifier(G, F, alpha, beta)
        payload["verification"]["alpha"] = alpha
        payload["verification"]["beta_len"] = beta
    _write_report(args.report, args, cfg, [out, args.report], payload)
    return EXIT_OK


def cmd_ultrasparsify(args):
    G = _load_graph(args)
    cfg = _build_config(args)
    k = args.k or 2
    H = ultrasparsify(G, k, named_rng(cfg.seed, "cli", "ultra"))
    out = args.out or "ultrasparse.edgelist"
    write_edgelist(H, out)
    payload = {"k": k, "edges": H.m,
               "edge_budget": G.n + 2.0 * G.n / k}
    if G.n <= cfg.dense_cap:
        payload["pencil_max"] = oracle.max_generalized_eigenvalue(G, H)
        payload["upper_ok"] = bool(oracle.spectral_sandwich(H, H, G, 1.0, 1.0))
        payload["pencil_bound"] = 108.0 * k * k
    _write_report(args.report, args, cfg, [out, args.report], payload)
    return EXIT_OK


def cmd_decompose(args):
    G = _load_graph(args)
    cfg = _build_config(args)
    bucket_of = np.zeros(G.m, dtype=np.int64)
    dec = decompose(G.copy_unweighted(), bucket_of, 1, args.beta, args.radius,
                    debug=cfg.debug_checks)
    payload = {"beta": args.beta, "radius": args.radius,
               "pieces": [sorted(int(v) for v in p) for p in dec.pieces],
               "tree_count": dec.tree_count,
               "stats": {key: val for key, val in dec.stats.items()
                         if np.isscalar(val)}}
    _write_report(args.report, args, cfg, [args.report], payload)
    return EXIT_OK


def cmd_verify(args):
    G = _load_graph(args)
    cfg = _build_config(args)
    payload = {}
    ok = True
    if args.solution:
        x = read_vector(args.solution)
        b = read_vector(args.rhs)
        xstar = _reference_solution(G, b)
        err = _relative_a_error(G, x, xstar)
        tol = args.eps if args.eps is not None else cfg.epsilon
        payload["solution"] = {"relative_a_error": err, "tolerance": tol,
                               "pass": bool(err <= tol)}
        ok &= err <= tol
    if args.subgraph:
        H = read_graph(args.subgraph, args.format)
        lam = oracle.max_generalized_eigenvalue(G, H, cap=cfg.oracle_cap)
        upper = bool(oracle.spectral_sandwich(H, H, G, 1.0, 1.0,
                                              cap=cfg.oracle_cap))
        sub = {"pencil_max": lam, "laplacian_dominated": upper}
        if args.pencil_bound is not None:
            sub["pencil_bound"] = args.pencil_bound
            sub["pass"] = bool(upper and lam <= args.pencil_bound)
            ok &= sub["pass"]
        payload["subgraph"] = sub
    if args.retained:
        H = read_graph(args.retained, args.format)
        F = set()
        pairs = {}
        for e in range(G.m):
            pairs.setdefault((int(G.us[e]), int(G.vs[e])), []).append(e)
        for e in range(H.m):
            key = (int(H.us[e]), int(H.vs[e]))
            if pairs.get(key):
                F.add(pairs[key].pop(0))
        res = verify_path_sparsifier(G, F, args.alpha, args.beta_len)
        payload["path_sparsifier"] = {"pass": res["pass"],
                                      "checked": res["checked"]}
        ok &= res["pass"]
    if not payload:
        raise ValueError("nothing to verify: pass --solution, --subgraph, "
                         "or --retained")
    payload["pass"] = bool(ok)
    _write_report(args.report, args, cfg, [args.report], payload)
    return EXIT_OK if ok else EXIT_NUMERIC


# ---------------------------------------------------------------------------
# bench families


def _grid_graph(side, weights=None, rng=None):
    edges = []
    idx = lambda i, j: i * side + j
    for i in range(side):
        for j in range(side):
            if i + 1 < side:
                edges.append((idx(i, j), idx(i + 1, j), 1.0))
            if j + 1 < side:
                edges.append((idx(i, j), idx(i, j + 1), 1.0))
    if weights is not None:
        edges = [(u, v, w * weights(rng)) for u, v, w in edges]
    return build_graph(side * side, edges)


def _bench_instance(family, n, rng, w_ratio=1e6):
    if family == "grid":
        side = max(2, int(round(math.sqrt(n))))
        return _grid_graph(side)
    if family == "random-regular":
        import networkx as nx
        d = 8
        nn = n if (n * d) % 2 == 0 else n + 1
        Gx = nx.random_regular_graph(d, nn, seed=int(rng.integers(2 ** 31)))
        return build_graph(nn, [(u, v, 1.0) for u, v in Gx.edges()])
    if family == "expander":
        import networkx as nx
        side = max(2, int(round(math.sqrt(n))))
        Gx = nx.margulis_gabber_galil_graph(side)
        relabel = {v: i for i, v in enumerate(sorted(Gx.nodes()))}
        edges = [(relabel[u], relabel[v], 1.0)
                 for u, v in Gx.edges() if relabel[u] != relabel[v]]
        return build_graph(side * side, edges)
    if family == "heavy-weights":
        side = max(2, int(round(math.sqrt(n))))
        span = math.log(w_ratio)
        return _grid_graph(side,
                           weights=lambda r: math.exp(r.uniform(0, span)),
                           rng=rng)
    raise ValueError(f"unknown bench family {family!r}")


def cmd_bench(args):
    cfg = _build_config(args)
    rows = []
    for n in args.sizes:
        for s in range(args.seeds):
            rng = named_rng(cfg.seed, "bench", args.family, n, s)
            G = _bench_instance(args.family, n, rng)
            b = rng.standard_normal(G.n)
            b -= b.mean()
            xstar = _reference_solution(G, b)
            report = SolveReport()
            t0 = time.time()
            x = recursive_solver(G, b, cfg.epsilon, cfg,
                                 named_rng(cfg.seed, "bench-solve", n, s),
                                 report)
            wall = time.time() - t0
            err = _relative_a_error(G, x, xstar)
            t0 = time.time()
            xcg = cg_solve(G, b, tol=cfg.epsilon)
            wall_cg = time.time() - t0
            err_cg = _relative_a_error(G, xcg, xstar)
            row = {"family": args.family, "n": G.n, "m": G.m, "seed": s,
                   "iterations": sum(report.iterations.values()),
                   "wall": round(wall, 4), "final_error": err,
                   "cg_wall": round(wall_cg, 4), "cg_error": err_cg}
            if args.family == "heavy-weights":
                w = G.ws
                row["weight_classes"] = int(np.ceil(np.log(w.max() / w.min())
                                                    / np.log(10.0))) + 1
            rows.append(row)
            print(",".join(str(row[key]) for key in row), flush=True)
    out = args.out or "bench.csv"
    with open(out, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=list(rows[0].keys()))
        w.writeheader()
        w.writerows(rows)
    return EXIT_OK


# ---------------------------------------------------------------------------


def _add_common(sp, graph=True):
    if graph:
        sp.add_argument("graph", help="input graph file")
    sp.add_argument("--format", choices=["edgelist", "mtx"], default="edgelist")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--eps", type=float, default=None)
    sp.add_argument("--k", type=int, default=None)
    sp.add_argument("--p", type=float, default=None)
    sp.add_argument("--config", action="append", metavar="KEY=VAL")
    sp.add_argument("--out", default=None)
    sp.add_argument("--report", default="report.json")


def build_parser():
    ap = argparse.ArgumentParser(prog="lapnet",
                                 description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="solve L_G x = b")
    _add_common(sp)
    sp.add_argument("rhs", help="right-hand-side vector file")
    sp.set_defaults(fn=cmd_solve)

    sp = sub.add_parser("sparsify", help="distortion-bounded spectral subgraph")
    _add_common(sp)
    sp.add_argument("--tau-out", default=None)
    sp.set_defaults(fn=cmd_sparsify)

    sp = sub.add_parser("path-sparsify", help="vertex-connectivity sparsifier")
    _add_common(sp)
    sp.add_argument("--check", action="store_true",
                    help="run the exact verification oracle (small n only)")
    sp.set_defaults(fn=cmd_path_sparsify)

    sp = sub.add_parser("ultrasparsify", help="few-edge bounded-pencil subgraph")
    _add_common(sp)
    sp.set_defaults(fn=cmd_ultrasparsify)

    sp = sub.add_parser("decompose", help="low-diameter decomposition stats")
    _add_common(sp)
    sp.add_argument("--beta", type=float, default=0.1)
    sp.add_argument("--radius", type=float, default=10.0)
    sp.set_defaults(fn=cmd_decompose)

    sp = sub.add_parser("verify", help="check outputs against the dense oracle")
    _add_common(sp)
    sp.add_argument("--solution", default=None)
    sp.add_argument("--rhs", default=None)
    sp.add_argument("--subgraph", default=None)
    sp.add_argument("--pencil-bound", type=float, default=None)
    sp.add_argument("--retained", default=None)
    sp.add_argument("--alpha", type=float, default=1.0)
    sp.add_argument("--beta-len", type=float, default=float("inf"))
    sp.set_defaults(fn=cmd_verify)

    sp = sub.add_parser("bench", help="solver vs CG baseline table")
    _add_common(sp, graph=False)
    sp.add_argument("--family", required=True,
                    choices=["grid", "random-regular", "expander",
                             "heavy-weights"])
    sp.add_argument("--sizes", type=int, nargs="+", required=True)
    sp.add_argument("--seeds", type=int, default=1)
    sp.set_defaults(fn=cmd_bench)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (OSError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericalFailure, DegenerateInput, oracle.OracleCapExceeded,
            np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
