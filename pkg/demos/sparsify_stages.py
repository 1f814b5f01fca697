"""Show the sparsification stages on one dense graph.

For K_80: the distortion subgraph with its tau overestimates, a partial
path sparsification with its (alpha, beta) claims, and the dense
ultrasparsifier with its measured pencil, each checked against the
dense oracle.

Run:  python3 demos/sparsify_stages.py
"""

import numpy as np

from lapnet import SolverConfig, build_graph
from lapnet.oracle import max_generalized_eigenvalue
from lapnet.pathsparsify import partial_path_sparsify, path_sparsify
from lapnet.spectral_subgraph import distortion_p, spectral_subgraph
from lapnet.solvers import named_rng
from lapnet.ultrasparsify import ultrasparsify


def main():
    n = 80
    G = build_graph(n, [(i, j, 1.0) for i in range(n) for j in range(i + 1, n)])
    print(f"K_{n}: m = {G.m}")

    k, p = 12.0, 0.75
    fn_rng = named_rng(0, "demo", "path")
    fn = lambda g: path_sparsify(g, 4, fn_rng)[0]
    D = spectral_subgraph(G, k, p, fn, named_rng(0, "demo"))
    print(f"\ndistortion subgraph: kept {len(D.H)} edges, "
          f"||tau||_p^p = {D.kappa_measured:.1f}")
    print(f"exact distortion = {distortion_p(G, D.H, p):.1f} "
          f"(must not exceed the tau norm)")

    cfg = SolverConfig(C_unif=1.0)   # scaled so sampling genuinely happens
    res = partial_path_sparsify(G, 1, named_rng(1, "demo"), cfg)
    print(f"\npartial path sparsifier: p = {res.p:.2f}, "
          f"|F| = {len(res.F)}, |E_cut| = {len(res.E_cut)}, "
          f"covered = {len(res.covered)}")
    print(f"claims: alpha >= {res.alpha:.2f}, path length <= {res.beta_len:.1f}")

    k_ultra = 3
    H = ultrasparsify(G, k_ultra, np.random.default_rng(2))
    pencil = max_generalized_eigenvalue(G, H)
    print(f"\nultrasparsifier k={k_ultra}: {H.m} edges "
          f"(budget {n + 2 * n // k_ultra}), "
          f"pencil {pencil:.1f} <= {108 * k_ultra ** 2}")


if __name__ == "__main__":
    main()
