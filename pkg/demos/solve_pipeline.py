"""Walk through the solver stack on a 32x32 grid.

Builds the grid, runs the recursive solver at eps = 1e-8, and compares
against a conjugate-gradient reference, printing the per-level telemetry
the solver records along the way.

Run:  python3 demos/solve_pipeline.py
"""

import numpy as np

from lapnet import SolveReport, build_graph, cg_solve, recursive_solver
from lapnet.oracle import a_norm_error


def grid(side):
    edges = []
    idx = lambda i, j: i * side + j
    for i in range(side):
        for j in range(side):
            if i + 1 < side:
                edges.append((idx(i, j), idx(i + 1, j), 1.0))
            if j + 1 < side:
                edges.append((idx(i, j), idx(i, j + 1), 1.0))
    return build_graph(side * side, edges)


def main():
    G = grid(32)
    rng = np.random.default_rng(0)
    b = rng.standard_normal(G.n)
    b -= b.mean()

    report = SolveReport()
    x = recursive_solver(G, b, 1e-8, report=report)
    xstar = cg_solve(G, b, tol=1e-14)
    den = float(xstar @ (G.laplacian() @ xstar))
    err = a_norm_error(G, x, xstar) / den

    print(f"grid 32x32: n={G.n}, m={G.m}")
    print(f"relative A-norm squared error: {err:.3e}")
    print(f"wall time: {report.wall_time:.2f}s")
    for lvl in report.levels:
        if lvl["base"]:
            print(f"  depth {lvl['depth']}: base case, n={lvl['n']} m={lvl['m']}")
        else:
            print(f"  depth {lvl['depth']}: n={lvl['n']} m={lvl['m']} "
                  f"eta={lvl['eta']:.2f} |H|={lvl['H_edges']} "
                  f"kappa={lvl['kappa_measured']:.1f}")


if __name__ == "__main__":
    main()
