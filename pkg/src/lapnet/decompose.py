"""Bucketed ball-growing decomposition.

Grows hop-count balls from the lowest surviving vertex id and cuts a
piece out of the graph once the ball's boundary is small relative to its
volume simultaneously for every edge bucket.  Each piece is then covered
by a forest of shallow trees obtained by retracting the piece's BFS tree.

Guarantees checked (in debug mode and by the test suite):
  (a) per bucket E_i, edges cut across pieces <= 6*beta*|E_i| + 6*beta*m*exp(-r*beta/l)
  (b) every tree has radius <= r
  (c) total tree count <= (#pieces) + 4*m*exp(-r*beta/l)
"""

import math
import numpy as np
from dataclasses import dataclass, field


@dataclass
class PieceTree:
    root: int
    vertices: list                 # sorted vertex ids
    parent: dict                   # v -> parent vertex (root absent)
    parent_edge: dict              # v -> edge id to parent
    radius: int


@dataclass
class Decomposition:
    pieces: list                   # list of sorted vertex-id lists
    trees: list                    # per piece: list of PieceTree
    ball_radii: list               # R_t per piece
    cut_edges_by_bucket: dict      # bucket label -> list of cut edge ids
    stats: dict = field(default_factory=dict)

    @property
    def tree_count(self):
        return sum(len(ts) for ts in self.trees)


def decompose(G, bucket_of, n_buckets, beta, r, debug=False):
    """Partition G's vertices into low-boundary pieces with radius-r trees.

    G is treated as unweighted; `bucket_of` maps edge id -> bucket index in
    [0, n_buckets).  The while-condition is evaluated for exactly the
    n_buckets passed in; buckets with no surviving edges are skipped.
    """
    if not (0 < beta <= 1.0 / 6.0):
        raise ValueError("beta must be in (0, 1/6]")
    if r < 0:
        raise ValueError("r must be >= 0")
    n, m = G.n, G.m
    bucket_of = np.asarray(bucket_of, dtype=np.int64)
    if bucket_of.shape != (m,):
        raise ValueError("bucket assignment must cover every edge")
    if m and (bucket_of.min() < 0 or bucket_of.max() >= n_buckets):
        raise ValueError("bucket index out of range")
    ell = max(1, n_buckets)
    exp_term = math.exp(-r * beta / ell)

    alive = np.ones(n, dtype=bool)
    edge_alive = np.ones(m, dtype=bool)
    # surviving degree per vertex (self-loop counts once)
    deg = G.edge_count_degrees().astype(np.int64)
    # surviving degree restricted to each bucket
    deg_bucket = np.zeros((n_buckets, n), dtype=np.int64)
    for e in range(m):
        u, v, b = G.us[e], G.vs[e], bucket_of[e]
        deg_bucket[b, u] += 1
        if u != v:
            deg_bucket[b, v] += 1
    bucket_alive_count = np.bincount(bucket_of, minlength=n_buckets) if m else \
        np.zeros(n_buckets, dtype=np.int64)

    pieces, trees, ball_radii = [], [], []
    piece_of = np.full(n, -1, dtype=np.int64)

    remaining = list(range(n))
    ptr = 0
    while ptr < n:
        while ptr < n and not alive[remaining[ptr]]:
            ptr += 1
        if ptr >= n:
            break
        v0 = remaining[ptr]

        in_ball = np.zeros(n, dtype=bool)
        in_ball[v0] = True
        parent = {}
        parent_edge = {}
        depth = {v0: 0}
        ball = [v0]
        frontier = [v0]
        R = 0
        vol_all = int(deg[v0])
        vol_b = deg_bucket[:, v0].astype(np.int64).copy()
        boundary = {}                      # edge id -> bucket
        bd_all = 0
        bd_b = np.zeros(n_buckets, dtype=np.int64)
        for b, e in zip(*G.neighbors(v0)):
            if alive[b] and b != v0 and edge_alive[e] and e not in boundary:
                boundary[e] = bucket_of[e]
                bd_all += 1
                bd_b[bucket_of[e]] += 1

        def condition_holds():
            for j in range(n_buckets):
                if bucket_alive_count[j] <= 0:
                    continue
                lhs = exp_term * bd_all + bd_b[j]
                rhs = 3.0 * beta * (exp_term * vol_all + vol_b[j])
                if lhs >= rhs:
                    return True
            return False

        while bd_all > 0 and condition_holds():
            # expand by one hop; deterministic order (vertex id, then edge id)
            R += 1
            layer = []
            for a in sorted(frontier):
                nbrs, eids = G.neighbors(a)
                for b, e in zip(nbrs, eids):
                    if alive[b] and edge_alive[e] and not in_ball[b]:
                        in_ball[b] = True
                        depth[b] = R
                        parent[int(b)] = int(a)
                        parent_edge[int(b)] = int(e)
                        layer.append(int(b))
            if debug:
                prev_vol, prev_bd = vol_all, bd_all
            for b in layer:
                vol_all += int(deg[b])
                vol_b += deg_bucket[:, b]
                ball.append(b)
            # refresh boundary around new layer
            for a in layer:
                nbrs, eids = G.neighbors(a)
                for b, e in zip(nbrs, eids):
                    if not alive[b] or not edge_alive[e] or b == a:
                        continue
                    if in_ball[b]:
                        if e in boundary:
                            del boundary[e]
                            bd_all -= 1
                            bd_b[bucket_of[e]] -= 1
                    else:
                        if e not in boundary:
                            boundary[e] = bucket_of[e]
                            bd_all += 1
                            bd_b[bucket_of[e]] += 1
            if debug:
                # ball volume monotonicity: vol(B(s,R)) >= vol(B(s,R-1)) + vol(dB(s,R-1))
                assert vol_all >= prev_vol + prev_bd, "ball volume monotonicity violated"
            frontier = layer

        # cut the piece out
        t = len(pieces)
        piece = sorted(ball)
        for a in piece:
            piece_of[a] = t
        pieces.append(piece)
        ball_radii.append(R)
        trees.append(_retract(piece, parent, parent_edge, depth, v0, R, r))

        # delete ball vertices and incident edges from the surviving graph
        for a in piece:
            alive[a] = False
        incident = set()
        for a in piece:
            _, eids = G.neighbors(a)
            incident.update(int(e) for e in eids)
        dead_edges = [e for e in incident if edge_alive[e]]
        for e in dead_edges:
            edge_alive[e] = False
            b = bucket_of[e]
            bucket_alive_count[b] -= 1
            u, w = G.us[e], G.vs[e]
            deg[u] -= 1
            deg_bucket[b, u] -= 1
            if u != w:
                deg[w] -= 1
                deg_bucket[b, w] -= 1

    # cut edges: endpoints in different pieces
    cut_by_bucket = {j: [] for j in range(n_buckets)}
    for e in range(m):
        if piece_of[G.us[e]] != piece_of[G.vs[e]]:
            cut_by_bucket[bucket_of[e]].append(e)

    bucket_sizes = np.bincount(bucket_of, minlength=n_buckets) if m else \
        np.zeros(n_buckets, dtype=np.int64)
    dec = Decomposition(pieces, trees, ball_radii, cut_by_bucket,
                        stats={"m": m, "exp_term": exp_term, "beta": beta, "r": r,
                               "bucket_sizes": bucket_sizes.tolist()})
    if debug:
        check_decomposition_bounds(dec, beta, r, m, exp_term, bucket_sizes)
    return dec


def _retract(piece, parent, parent_edge, depth, root, R, r):
    """Split the BFS tree into subtrees of radius <= r.

    Tree edges whose deeper endpoint sits at depth <= R - r are deleted;
    what remains is a singleton per vertex at depth < R - r and one subtree
    rooted at each vertex of depth exactly R - r (plus the original tree
    when R < r).
    """
    if R < r:
        return [PieceTree(root=root, vertices=list(piece),
                          parent=dict(parent), parent_edge=dict(parent_edge),
                          radius=R)]
    cutoff = R - r
    comp_root = {}
    for v in piece:
        d = depth[v]
        if d <= cutoff:
            comp_root[v] = v
    # walk each deep vertex up to its depth-(cutoff) ancestor
    for v in piece:
        if v in comp_root:
            continue
        path = []
        x = v
        while x not in comp_root:
            path.append(x)
            x = parent[x]
        for y in path:
            comp_root[y] = comp_root[x]
    groups = {}
    for v in piece:
        groups.setdefault(comp_root[v], []).append(v)
    out = []
    for rt, vs in sorted(groups.items()):
        par = {v: parent[v] for v in vs if v != rt and depth[v] > cutoff}
        pare = {v: parent_edge[v] for v in par}
        rad = max(depth[v] - depth[rt] for v in vs)
        out.append(PieceTree(root=rt, vertices=sorted(vs),
                             parent=par, parent_edge=pare, radius=rad))
    return out


def check_decomposition_bounds(dec, beta, r, m, exp_term, bucket_sizes):
    """Assert the three output bounds; raises AssertionError on violation."""
    for j, cut in dec.cut_edges_by_bucket.items():
        limit = 6 * beta * bucket_sizes[j] + 6 * beta * m * exp_term
        assert len(cut) <= limit + 1e-9, \
            f"bucket {j}: cut {len(cut)} > {limit}"
    for ts in dec.trees:
        for t in ts:
            assert t.radius <= r, f"tree radius {t.radius} > {r}"
    alpha = len(dec.pieces)
    assert dec.tree_count <= alpha + 4 * m * exp_term + 1e-9, \
        f"tree count {dec.tree_count} > {alpha} + {4 * m * exp_term}"
    # pieces partition V; trees partition each piece
    seen = set()
    for piece, ts in zip(dec.pieces, dec.trees):
        assert not (set(piece) & seen)
        seen.update(piece)
        tv = [v for t in ts for v in t.vertices]
        assert sorted(tv) == sorted(piece)
