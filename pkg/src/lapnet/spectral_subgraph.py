"""Ultrasparse spectral subgraphs with leverage-score overestimates.

Edges are bucketed by relative resistance l_e = w_max / w_e in powers of
delta.  A sliding window of sigma+1 buckets is repeatedly decomposed
(after contracting the forest F built so far) into low-boundary pieces
with shallow trees; tree edges join F, each piece's trees are stitched
together by path-sparsifying the contracted piece (augment), and every
edge inside a piece is "settled" with overestimate
tau_e = 4 w_e delta^{t+1} / w_max.  Buckets falling out of the window
are dumped into the keep-set S.  The output H = F (a forest) plus S,
with original weights and tau = 1 on H itself.
"""

import math
import numpy as np
from dataclasses import dataclass

from .graph import WeightedMultiGraph, edge_subgraph
from .decompose import decompose
from .config import SolverConfig, DEFAULT_P

WEIGHT_RATIO_EXPONENT = 12   # weights must satisfy w_max/w_min <= n^this
TAU_CAP = 1e280


@dataclass
class AkpwParams:
    k: float
    p: float
    beta: float
    sigma: int
    delta: float

    @classmethod
    def from_kp(cls, k, p):
        if k <= 1:
            raise ValueError("k must be > 1")
        if not (0.5 < p < 1.0):
            raise ValueError("p must be in (1/2, 1)")
        logk = math.log(k)
        beta = (49.0 * logk ** 2) ** (-p / (1.0 - p))
        sigma = max(1, math.ceil(logk / math.log(1.0 / beta)))
        delta = 48.0 * sigma * logk / beta
        return cls(k, p, beta, sigma, delta)

    def __post_init__(self):
        if not (0.0 < self.beta < 1.0):
            raise ValueError("beta out of (0,1)")
        if self.sigma < 1:
            raise ValueError("sigma must be >= 1")
        if self.delta <= 1.0:
            raise ValueError("delta must be > 1")
        # geometric-series convergence of the stretch bound
        if self.beta * self.delta ** self.p >= 1.0:
            raise ValueError("beta * delta^p >= 1: stretch series diverges")


@dataclass
class DistortionSubgraph:
    H: list                      # sorted retained edge ids of G
    tau: np.ndarray              # per-edge overestimates, length m
    p: float
    kappa_measured: float        # sum tau_e^p
    stats: dict

    def subgraph(self, G):
        return edge_subgraph(G, self.H)


def bucket_edges(G, delta):
    """1-based bucket index per edge: l_e = w_max/w_e in [delta^{i-1}, delta^i)."""
    if delta <= 1.0:
        raise ValueError("delta must be > 1")
    if G.m == 0:
        return np.zeros(0, dtype=np.int64)
    w_max, w_min = float(G.ws.max()), float(G.ws.min())
    if w_max / w_min > max(G.n, 2) ** WEIGHT_RATIO_EXPONENT:
        raise ValueError("weight ratio is not polynomially bounded")
    ell = w_max / G.ws
    idx = np.floor(np.log(ell) / math.log(delta) + 1e-12).astype(np.int64) + 1
    return np.maximum(idx, 1)


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


def augment_tree(G, forest, path_sparsify_fn):
    """Stitch a piece's trees together with a path-sparsified edge set.

    `forest` is a list of vertex-id lists partitioning V(G).  With one
    tree there is nothing to do.  Otherwise each tree is contracted to a
    supernode, parallel edges are collapsed to their lowest-id
    representative, and `path_sparsify_fn` picks the edges to keep; the
    kept representatives are returned as edge ids of G.
    """
    cover = sorted(v for tree in forest for v in tree)
    if cover != list(range(G.n)):
        raise ValueError("forest vertex sets must partition V(G)")
    if len(forest) <= 1:
        return set()
    super_of = np.empty(G.n, dtype=np.int64)
    for i, tree in enumerate(forest):
        for v in tree:
            super_of[v] = i
    rep = {}
    for e in range(G.m):
        a, b = super_of[G.us[e]], super_of[G.vs[e]]
        if a == b:
            continue
        key = (min(a, b), max(a, b))
        if key not in rep:
            rep[key] = e
    if not rep:
        return set()
    keys = sorted(rep)
    contracted = WeightedMultiGraph(
        len(forest),
        [k[0] for k in keys], [k[1] for k in keys],
        [1.0] * len(keys))
    kept = path_sparsify_fn(contracted)
    return {int(rep[keys[int(e)]]) for e in kept}


def _forest_resistance_diameters(G, F_edges):
    """Per-component resistance diameter of the forest F (edge lengths 1/w)."""
    adj = {}
    for e in F_edges:
        a, b = int(G.us[e]), int(G.vs[e])
        r = 1.0 / float(G.ws[e])
        adj.setdefault(a, []).append((b, r))
        adj.setdefault(b, []).append((a, r))
    seen = set()
    diams = []

    def farthest(src):
        best, bestd = src, 0.0
        stack = [(src, -1, 0.0)]
        comp = []
        while stack:
            v, par, d = stack.pop()
            comp.append(v)
            if d > bestd:
                best, bestd = v, d
            for (u, r) in adj.get(v, []):
                if u != par:
                    stack.append((u, v, d + r))
        return best, bestd, comp

    for v in adj:
        if v in seen:
            continue
        a, _, comp = farthest(v)
        seen.update(comp)
        _, diam, _ = farthest(a)
        diams.append(diam)
    return diams


def spectral_subgraph(G, k, p, path_sparsify_fn, rng, cfg: SolverConfig = None,
                      params: AkpwParams = None):
    """Build H = F (forest) + S (kept edges) with overestimates tau.

    The loop ends once every edge is settled; H spans each component of G
    even if the forest F alone does not.
    """
    cfg = cfg or SolverConfig()
    params = params or AkpwParams.from_kp(k, p)
    n, m = G.n, G.m
    beta, sigma, delta = params.beta, params.sigma, params.delta
    if m == 0:
        return DistortionSubgraph([], np.zeros(0), p, 0.0, {"iterations": 0})
    w_max = float(G.ws.max())
    bucket = bucket_edges(G, delta)
    max_bucket = int(bucket.max())
    y_size = int(6 * m // max(1, int(k * k)))

    uf = _UnionFind(n)
    settled = np.zeros(m, dtype=bool)
    tau = np.zeros(m, dtype=np.float64)
    F_edges, S_edges = [], set()
    telemetry = []

    def settle_keep(e):
        if not settled[e]:
            settled[e] = True
            tau[e] = 1.0
            S_edges.add(int(e))

    t = 0
    while not settled.all() and t <= max_bucket + sigma + 1:
        t += 1
        lo = t - sigma
        window = np.nonzero(~settled & (bucket >= max(1, lo)) & (bucket <= t))[0]
        it_stats = {"t": t, "window_edges": int(len(window))}
        if len(window):
            # contract F components and build the unweighted window graph
            supers = {}
            for e in window:
                for v in (int(G.us[e]), int(G.vs[e])):
                    r = uf.find(v)
                    if r not in supers:
                        supers[r] = len(supers)
            us_t = np.array([supers[uf.find(int(G.us[e]))] for e in window])
            vs_t = np.array([supers[uf.find(int(G.vs[e]))] for e in window])
            Gt = WeightedMultiGraph(len(supers), us_t, vs_t, np.ones(len(window)),
                                    orig_edge_ids=window)
            before = {int(j): int((bucket[window] == j).sum())
                      for j in range(max(1, lo), t + 1)}
            dec = decompose(Gt, bucket[window] - lo, sigma + 1,
                            beta / 6.0, delta / 4.0,
                            debug=cfg.debug_checks)
            piece_of = np.empty(Gt.n, dtype=np.int64)
            for i, piece in enumerate(dec.pieces):
                piece_of[piece] = i
            internal = piece_of[Gt.us] == piece_of[Gt.vs]
            for i, (piece, trees) in enumerate(zip(dec.pieces, dec.trees)):
                for tr in trees:
                    for e_t in tr.parent_edge.values():
                        e = int(window[e_t])
                        if uf.union(int(G.us[e]), int(G.vs[e])):
                            F_edges.append(e)
                            settled[e] = True
                            tau[e] = 1.0
                        else:
                            settle_keep(e)
                if len(trees) > 1:
                    vmap = {v: i2 for i2, v in enumerate(piece)}
                    eids = [e_t for e_t in range(Gt.m)
                            if internal[e_t] and piece_of[Gt.us[e_t]] == i]
                    Gp = WeightedMultiGraph(
                        len(piece),
                        [vmap[int(Gt.us[e_t])] for e_t in eids],
                        [vmap[int(Gt.vs[e_t])] for e_t in eids],
                        [1.0] * len(eids))
                    fvs = [[vmap[v] for v in tr.vertices] for tr in trees]
                    for e_p in augment_tree(Gp, fvs, path_sparsify_fn):
                        settle_keep(int(window[eids[int(e_p)]]))
            # remaining internal edges: settled with the tau formula
            tval_scale = min(delta ** (t + 1) / w_max, TAU_CAP)
            for e_t in np.nonzero(internal)[0]:
                e = int(window[e_t])
                if not settled[e]:
                    settled[e] = True
                    tau[e] = min(4.0 * float(G.ws[e]) * tval_scale, TAU_CAP)
            # per-bucket geometric decay: survivors are exactly the cut edges
            exp_term = dec.stats["exp_term"]
            for j in range(max(1, lo), t + 1):
                left = int((~settled[window] & (bucket[window] == j)).sum())
                limit = beta * before[j] + beta * Gt.m * exp_term
                assert left <= limit + 1e-9, \
                    f"bucket {j} decay violated: {left} > {limit}"
                it_stats[f"bucket_{j}"] = (before[j], left)
        # keep a deterministic prefix from each interior window bucket
        if y_size >= 1:
            for j in range(max(1, lo + 1), t + 1):
                cand = np.nonzero(~settled & (bucket == j))[0][:y_size]
                for e in cand:
                    settle_keep(int(e))
        # the bucket leaving the window is kept wholesale
        if lo >= 1:
            for e in np.nonzero(~settled & (bucket == lo))[0]:
                settle_keep(int(e))
        if cfg.debug_checks:
            bound = delta ** (t + 1) / w_max
            for d in _forest_resistance_diameters(G, F_edges):
                assert d <= bound * (1 + 1e-9), \
                    f"forest resistance diameter {d} > {bound}"
        telemetry.append(it_stats)

    assert settled.all(), "unsettled edges remain after the window passed"
    H = sorted(set(F_edges) | S_edges)
    kappa = float(np.sum(np.minimum(tau, TAU_CAP) ** p))
    stats = {"iterations": len(telemetry), "telemetry": telemetry,
             "forest_edges": len(F_edges), "kept_edges": len(S_edges),
             "beta": beta, "sigma": sigma, "delta": delta}
    return DistortionSubgraph(H, tau, p, kappa, stats)


def distortion(G, H_edges, cap=500):
    """Exact sum over edges of (w_e * R^eff_H(e))^p with p = 1 exponent left
    to the caller -- here the definition's exponent is taken from DEFAULT_P
    unless given via functools.partial; see `distortion_p`."""
    return distortion_p(G, H_edges, DEFAULT_P, cap)


def distortion_p(G, H_edges, p, cap=500):
    from .oracle import laplacian_pinv, _check_cap
    _check_cap(G.n, cap)
    Hg = edge_subgraph(G, sorted(H_edges))
    pinv = laplacian_pinv(Hg, cap)
    total = 0.0
    for e in range(G.m):
        u, v = int(G.us[e]), int(G.vs[e])
        if u == v:
            continue
        r = pinv[u, u] + pinv[v, v] - 2 * pinv[u, v]
        total += (float(G.ws[e]) * max(r, 0.0)) ** p
    return total
