import math

import numpy as np
import pytest

from lapnet.graph import build_graph


def grid_graph(side, weight_fn=None):
    """2D grid on side*side vertices with unit (or generated) weights."""
    edges = []
    idx = lambda i, j: i * side + j
    for i in range(side):
        for j in range(side):
            if i + 1 < side:
                edges.append((idx(i, j), idx(i + 1, j), 1.0))
            if j + 1 < side:
                edges.append((idx(i, j), idx(i, j + 1), 1.0))
    if weight_fn is not None:
        edges = [(u, v, weight_fn()) for u, v, _ in edges]
    return build_graph(side * side, edges)


def complete_graph(n, w=1.0):
    return build_graph(n, [(i, j, w) for i in range(n) for j in range(i + 1, n)])


def path_graph(n, w=1.0):
    return build_graph(n, [(i, i + 1, w) for i in range(n - 1)])


def cycle_graph(n, w=1.0):
    return build_graph(n, [(i, (i + 1) % n, w) for i in range(n)])


def random_connected_graph(rng, n, extra_edges, w_lo=0.5, w_hi=2.0):
    """Random spanning tree plus `extra_edges` random chords."""
    edges = []
    order = rng.permutation(n)
    for i in range(1, n):
        j = int(rng.integers(0, i))
        edges.append((int(order[j]), int(order[i]),
                      float(rng.uniform(w_lo, w_hi))))
    for _ in range(extra_edges):
        u, v = rng.integers(0, n, 2)
        if u != v:
            edges.append((int(u), int(v), float(rng.uniform(w_lo, w_hi))))
    return build_graph(n, edges)


def random_regular_graph(rng, d, n):
    import networkx as nx
    Gx = nx.random_regular_graph(d, n, seed=int(rng.integers(2 ** 31)))
    return build_graph(n, [(u, v, 1.0) for u, v in Gx.edges()])


def hypercube_graph(dim):
    n = 1 << dim
    edges = [(v, v ^ (1 << b), 1.0)
             for v in range(n) for b in range(dim) if v < (v ^ (1 << b))]
    return build_graph(n, edges)


def erdos_renyi(rng, n, p, w_lo=1.0, w_hi=1.0):
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                w = w_lo if w_lo == w_hi else float(rng.uniform(w_lo, w_hi))
                edges.append((i, j, w))
    return build_graph(n, edges)


def relative_a_error(G, x, xstar):
    from lapnet import oracle
    num = oracle.a_norm_error(G, x, xstar)
    den = float(np.asarray(xstar) @ (G.laplacian() @ np.asarray(xstar)))
    return num / den if den > 0 else num
