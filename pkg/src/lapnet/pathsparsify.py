"""Path sparsification of unweighted graphs.

Pipeline: degree regularization (remove low-degree vertices, split into
near-regular bipartite pieces), uniform edge sampling, spectral expander
decomposition of the sample, and an outer loop that re-runs the whole
thing on the deferred cut edges.  A retained subgraph F "covers" a
missing edge when the edge lies inside a certified expander piece: the
piece then contains many short vertex-disjoint paths between the edge's
endpoints.

Verification is done with exact Menger counts (unit-capacity max flow on
the directed split graph) plus a greedy path-peeling lower bound for the
length-bounded claim.
"""

import math
import numpy as np
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph
from dataclasses import dataclass, field

from .graph import WeightedMultiGraph, induced_subgraph, edge_subgraph, build_graph
from .config import SolverConfig


class DegenerateInput(Exception):
    """Preconditions unmet (too sparse / retry cap exhausted)."""


# ---------------------------------------------------------------------------
# degree regularization


@dataclass
class RegularPiece:
    graph: WeightedMultiGraph    # carries orig_vertex_ids / orig_edge_ids
    d_min: int
    d_max: int

    @property
    def d_ratio(self):
        return self.d_max / max(1, self.d_min)


def _piece(graph):
    deg = graph.edge_count_degrees()
    pos = deg[deg > 0]
    if len(pos) == 0:
        return RegularPiece(graph, 0, 0)
    return RegularPiece(graph, int(pos.min()), int(deg.max()))


def degree_lowerbound(G, c):
    """Remove vertices of degree below c * d_avg(G); d_avg is computed once.

    Returns the induced subgraph on the survivors.  Guarantees
    d_min >= c * d_avg(G) and at most c * Vol(G) removed edges.
    """
    if not (0 < c < 1):
        raise ValueError("c must be in (0,1)")
    n, m = G.n, G.m
    if n == 0:
        return G
    d_avg = 2.0 * m / n
    deg = G.edge_count_degrees().astype(np.int64)
    alive = np.ones(n, dtype=bool)
    queue = [v for v in range(n) if deg[v] < c * d_avg]
    adj = G.adjacency()
    indptr, dst, eid = adj
    edge_alive = np.ones(m, dtype=bool)
    while queue:
        a = queue.pop()
        if not alive[a]:
            continue
        alive[a] = False
        for b, e in zip(dst[indptr[a]:indptr[a + 1]], eid[indptr[a]:indptr[a + 1]]):
            if edge_alive[e]:
                edge_alive[e] = False
                deg[a] -= 1
                if b != a:
                    deg[b] -= 1
                    if alive[b] and deg[b] < c * d_avg:
                        queue.append(int(b))
    S = np.nonzero(alive)[0]
    return induced_subgraph(G, S)


def bipartite_split(G, LR, k, rng, c_split=2.0, max_retries=64,
                    check_preconditions=True):
    """Randomly partition the left side into k groups until every right
    degree and every |L_i| lands within the [1/(2k), 3/(2k)] window."""
    L, R = [sorted(set(x)) for x in LR]
    if k < 1:
        raise ValueError("k must be >= 1")
    deg = G.edge_count_degrees()
    if check_preconditions:
        if len(L) / k < c_split or any(deg[b] / k < c_split for b in R):
            raise DegenerateInput("bipartite_split preconditions unmet")
    if k == 1:
        return [induced_subgraph(G, L + R)]
    Larr = np.asarray(L, dtype=np.int64)
    for _ in range(max_retries):
        assign = rng.integers(0, k, size=len(Larr))
        ok = True
        groups = []
        for i in range(k):
            Li = Larr[assign == i]
            if not (len(L) / (2 * k) <= len(Li) <= 3 * len(L) / (2 * k)):
                ok = False
                break
            groups.append(Li)
        if not ok:
            continue
        subs = [induced_subgraph(G, list(Li) + R) for Li in groups]
        for Li, sub in zip(groups, subs):
            dsub = sub.edge_count_degrees()
            # induced_subgraph keeps sorted order, so local id = rank
            back = {v: i for i, v in enumerate(sorted(set(map(int, Li)) | set(R)))}
            for b in R:
                if not (deg[b] / (2 * k) <= dsub[back[b]] <= 3 * deg[b] / (2 * k)):
                    ok = False
                    break
            if not ok:
                break
        if ok:
            return subs
    raise DegenerateInput("bipartite_split retry cap exhausted")


def decompose_bipartite(G, LR, rng, cfg: SolverConfig):
    """Split a dense bipartite graph into edge-disjoint near-regular pieces."""
    L, R = [sorted(set(x)) for x in LR]
    deg = G.edge_count_degrees()
    volL, volR = int(deg[L].sum()), int(deg[R].sum())
    if not L or not R:
        raise DegenerateInput("empty side")
    d_avg_L, d_avg_R = volL / len(L), volR / len(R)
    if d_avg_L < cfg.c_bip or d_avg_R < cfg.c_bip:
        raise DegenerateInput("decompose_bipartite: side average degree below floor")
    if len(R) > len(L):
        L, R = R, L
        d_avg_L, d_avg_R = d_avg_R, d_avg_L
    Rp = [b for b in R if deg[b] >= 0.5 * d_avg_R]
    if len(Rp) >= len(L) / 2:
        return [_piece(degree_lowerbound(G, 0.5))]
    if not Rp:
        raise DegenerateInput("no right vertices above half the average degree")
    Gp = induced_subgraph(G, L + Rp)
    # induced_subgraph keeps sorted order, so local id = rank in the set
    back = {v: i for i, v in enumerate(sorted(set(L) | set(Rp)))}
    Lp = [back[a] for a in L]
    Rpp = [back[b] for b in Rp]
    k = max(1, len(L) // len(Rp))
    # clamp k so the split's concentration precondition stays satisfiable
    dp = Gp.edge_count_degrees()
    mind = min((int(dp[b]) for b in Rpp), default=0)
    k = max(1, min(k, int(min(mind, len(Lp)) / cfg.c_split))) if cfg.c_split > 0 else k
    subs = bipartite_split(Gp, (Lp, Rpp), k, rng, c_split=cfg.c_split,
                           max_retries=cfg.max_retries)
    out = []
    for sub in subs:
        # orig ids compose transitively through the subgraph chain already
        H = degree_lowerbound(sub, 0.5)
        if H.m:
            out.append(_piece(H))
    if not out:
        raise DegenerateInput("decompose_bipartite produced no nonempty piece")
    return out


def regular_decomposition(G, rng, cfg: SolverConfig):
    """Bucket vertices by degree and decompose bucket-pair subgraphs into
    edge-disjoint near-regular pieces (with vertex/volume guarantees)."""
    n, m = G.n, G.m
    if n == 0 or m == 0:
        raise DegenerateInput("empty graph")
    d_avg = 2.0 * m / n
    if d_avg < cfg.density_floor:
        raise DegenerateInput("average degree below density floor")
    Gp = degree_lowerbound(G, 0.5)
    degp = Gp.edge_count_degrees()
    kmax = max(1, int(math.floor(math.log(max(n, 3)))))
    bucket = np.clip(np.floor(np.log(np.maximum(degp, 1))).astype(int) + 1, 1, kmax)
    ln_n = math.log(max(n, 3))
    vol_bucket = {i: int(degp[bucket == i].sum()) for i in range(1, kmax + 1)}
    pieces = []
    for i in range(1, kmax + 1):
        Si = np.nonzero(bucket == i)[0]
        if len(Si) == 0:
            continue
        for j in range(i, kmax + 1):
            Sj = np.nonzero(bucket == j)[0]
            if len(Sj) == 0:
                continue
            if i == j:
                sub = induced_subgraph(Gp, Si)
            else:
                maskI = np.zeros(Gp.n, dtype=bool)
                maskI[Si] = True
                maskJ = np.zeros(Gp.n, dtype=bool)
                maskJ[Sj] = True
                cross = (maskI[Gp.us] & maskJ[Gp.vs]) | (maskJ[Gp.us] & maskI[Gp.vs])
                sub_all = edge_subgraph(Gp, np.nonzero(cross)[0])
                keepv = np.nonzero(maskI | maskJ)[0]
                sub = induced_subgraph(sub_all, keepv)
            vol_ij = 2 * sub.m
            if vol_ij < vol_bucket[i] / (2 * ln_n) or vol_ij < vol_bucket[j] / (2 * ln_n):
                continue
            try:
                if i == j:
                    H = degree_lowerbound(sub, 0.5)
                    new = [_piece(H)] if H.m else []
                else:
                    # sub was induced on sorted(keepv): local id = rank
                    back = {int(v): t for t, v in enumerate(keepv)}
                    Li = [back[v] for v in Si]
                    Rj = [back[v] for v in Sj]
                    new = decompose_bipartite(sub, (Li, Rj), rng, cfg)
            except DegenerateInput:
                continue
            # orig ids already point into G through the subgraph chain
            pieces.extend(new)
    if not pieces:
        raise DegenerateInput("regular decomposition produced no pieces")
    return pieces


# ---------------------------------------------------------------------------
# uniform sampling


def uniform_sample_graph(G, d, rng, C_unif=3.0):
    """Keep each edge independently with p = min(1, C_unif ln(n)/d).

    Returns an unweighted edge subgraph; the sampling probability is
    recorded on the result as `sample_p`.
    """
    p = min(1.0, C_unif * math.log(max(G.n, 2)) / max(d, 1e-12))
    if p >= 1.0:
        H = edge_subgraph(G, np.arange(G.m))
    else:
        keep = np.nonzero(rng.random(G.m) < p)[0]
        H = edge_subgraph(G, keep)
    H = H.copy_unweighted()
    H.sample_p = p
    return H


# ---------------------------------------------------------------------------
# expander decomposition (spectral recursion)


@dataclass
class ExpanderPiece:
    vertices: list               # vertex ids in the decomposed graph
    phi_cert: float              # Cheeger certificate lambda_2 / 2
    degrees: np.ndarray          # degrees in the ambient graph (with loops)


def _normalized_lambda2_fiedler(A, deg):
    """lambda_2 and Fiedler vector of the normalized Laplacian with
    degrees `deg`; degree mass missing from A (ambient degree in excess of
    the internal degree) is folded in as self-loop weight on the diagonal,
    so the Cheeger lower bound lambda_2/2 <= conductance stays valid."""
    d = np.maximum(deg.astype(float), 1e-12)
    excess = np.maximum(d - A.sum(axis=1), 0.0)
    Dm = 1.0 / np.sqrt(d)
    N = (np.diag(1.0 - excess / d)
         - (Dm[:, None] * A) * Dm[None, :])
    evals, evecs = np.linalg.eigh(N)
    return float(evals[1]), evecs[:, 1] * Dm


def expander_decompose(G, phi_target, cut_fraction=0.125, max_depth=60):
    """Partition V so each piece's self-looped induced subgraph carries a
    spectral conductance certificate phi_cert = lambda_2/2 >= phi_target.

    Pieces that cannot be certified within the recursion budget come back
    as singletons.  Cut statistics are recorded on the result.
    """
    n = G.n
    if n == 0:
        raise ValueError("empty graph")
    deg_full = G.edge_count_degrees().astype(np.int64)
    keep = G.us != G.vs
    A_full = sp.csr_matrix(
        (np.ones(int(keep.sum())), (G.us[keep], G.vs[keep])), shape=(n, n))
    A_full = A_full + A_full.T
    pieces = []

    def recurse(verts, depth):
        verts = np.asarray(sorted(verts), dtype=np.int64)
        if len(verts) == 1:
            pieces.append(ExpanderPiece([int(verts[0])], float("inf"),
                                        deg_full[verts]))
            return
        A = A_full[np.ix_(verts, verts)].toarray()
        deg = deg_full[verts]
        # split disconnected parts first (cheap, avoids a zero eigenvalue)
        ncomp, labels = csgraph.connected_components(sp.csr_matrix(A), directed=False)
        if ncomp > 1:
            for c in range(ncomp):
                recurse(verts[labels == c], depth)
            return
        lam2, fiedler = _normalized_lambda2_fiedler(A, deg)
        if lam2 / 2.0 >= phi_target or depth >= max_depth:
            if lam2 / 2.0 >= phi_target:
                pieces.append(ExpanderPiece([int(v) for v in verts], lam2 / 2.0, deg))
            else:
                for v in verts:
                    pieces.append(ExpanderPiece([int(v)], float("inf"),
                                                deg_full[[v]]))
            return
        # sweep cut on the Fiedler vector
        order = np.argsort(fiedler, kind="stable")
        volS = 0.0
        voltot = float(deg.sum())
        inS = np.zeros(len(verts), dtype=bool)
        cut = 0.0
        best, best_idx = float("inf"), 0
        for idx in range(len(verts) - 1):
            v = order[idx]
            volS += deg[v]
            cut += A[v].sum() - 2 * A[v][inS].sum()
            inS[v] = True
            denom = min(volS, voltot - volS)
            if denom > 0:
                phi = cut / denom
                if phi < best:
                    best, best_idx = phi, idx
        S = verts[order[:best_idx + 1]]
        T = verts[order[best_idx + 1:]]
        if len(S) == 0 or len(T) == 0:
            for v in verts:
                pieces.append(ExpanderPiece([int(v)], float("inf"), deg_full[[v]]))
            return
        recurse(S, depth + 1)
        recurse(T, depth + 1)

    recurse(np.arange(n), 0)
    # cut statistics
    label = np.zeros(n, dtype=np.int64)
    for i, pc in enumerate(pieces):
        for v in pc.vertices:
            label[v] = i
    cut_edges = int(np.count_nonzero(label[G.us] != label[G.vs]))
    for pc in pieces:
        pc.cut_fraction_budget = cut_fraction
    return pieces, cut_edges


def piece_selflooped_graph(G, piece):
    """Induced subgraph on the piece with self-loops restoring ambient degrees."""
    sub = induced_subgraph(G, piece.vertices)
    deg_sub = sub.edge_count_degrees()
    extra = piece.degrees - deg_sub
    us = list(sub.us)
    vs = list(sub.vs)
    ws = list(sub.ws)
    for v, k in enumerate(extra):
        if k > 0:
            us.append(v)
            vs.append(v)
            ws.append(float(k))
    return WeightedMultiGraph(sub.n, us, vs, ws)


# ---------------------------------------------------------------------------
# partial path sparsification (sample + expander pieces)


@dataclass
class PathSparsifierResult:
    F: set                       # retained edge ids
    E_cut: set                   # deferred edge ids
    covered: set                 # edges inside pieces, not retained
    alpha: float                 # claimed vertex-disjoint path count
    beta_len: float              # claimed path length bound
    p: float
    piece_stats: list = field(default_factory=list)


def _collapse_simple(G):
    """Drop self-loops and parallel edges, keeping the lowest edge id."""
    seen = {}
    for e in range(G.m):
        u, v = int(G.us[e]), int(G.vs[e])
        if u == v:
            continue
        key = (min(u, v), max(u, v))
        if key not in seen:
            seen[key] = e
    return edge_subgraph(G, sorted(seen.values()))


def partial_path_sparsify(G, k, rng, cfg: SolverConfig, debug=False):
    """Sample, find expanders in the sample, and keep their edges.

    Every input edge ends up retained (in F), deferred (in E_cut), or
    covered by an expander piece containing both endpoints.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    n, m = G.n, G.m
    deg = G.edge_count_degrees()
    pos = deg[deg > 0]
    d_min = int(pos.min()) if len(pos) else 0
    d = d_min / (10.0 * k)
    p = min(1.0, cfg.C_unif * math.log(max(n, 2)) / max(d, 1e-12))
    if p >= 1.0:
        return PathSparsifierResult(set(range(m)), set(), set(),
                                    float("inf"), 0.0, 1.0)
    keep = np.nonzero(rng.random(m) < p)[0]
    Gs = edge_subgraph(G, keep)              # sampled graph, same vertex ids
    pieces, _ = expander_decompose(Gs, cfg.phi_target, cfg.cut_fraction)

    F, covered, E_cut = set(), set(), set()
    stats = []
    label = np.zeros(n, dtype=np.int64)
    for i, pc in enumerate(pieces):
        for v in pc.vertices:
            label[v] = i
    sampled = np.zeros(m, dtype=bool)
    sampled[keep] = True
    for e in range(m):
        u, v = int(G.us[e]), int(G.vs[e])
        if u == v:
            continue
        if label[u] != label[v]:
            E_cut.add(e)
        elif sampled[e]:
            F.add(e)
        else:
            covered.add(e)
    alpha, beta_len = float("inf"), 0.0
    for pc in pieces:
        if len(pc.vertices) < 2 or not math.isfinite(pc.phi_cert):
            continue
        dmin_i = int(pc.degrees.min())
        dmax_i = int(pc.degrees.max())
        if dmin_i <= 0:
            continue
        ratio = dmax_i / dmin_i
        phi = min(pc.phi_cert, 1.0)
        a_i = phi * dmin_i / (8.0 * ratio)
        b_i = (4.0 * ratio / phi) * max(1.0, math.log(max(len(pc.vertices), 2) / dmin_i))
        alpha = min(alpha, a_i)
        beta_len = max(beta_len, b_i)
        stats.append({"n": len(pc.vertices), "phi_cert": pc.phi_cert,
                      "d_min": dmin_i, "d_max": dmax_i,
                      "alpha": a_i, "beta": b_i})
    if debug or cfg.debug_checks:
        assert len(E_cut) <= m / 2, f"|E_cut|={len(E_cut)} > |E|/2={m/2}"
    return PathSparsifierResult(F, E_cut, covered, alpha, beta_len, p, stats)


def path_sparsify(G, k, rng, cfg: SolverConfig = None):
    """Outer loop: regular decomposition + per-piece partial sparsification
    until the deferred edges become sparse.  Returns (edge id set, report)."""
    cfg = cfg or SolverConfig()
    Gs = _collapse_simple(G)
    remain = set(int(e) for e in Gs.orig_edge_ids)
    F = set()
    report = {"iterations": [], "claims": []}
    k_partial = cfg.k_partial(k, G.n)
    max_iter = max(1, int(cfg.c_iter * math.log2(max(G.m, 2))))
    it = 0
    while remain and it < max_iter:
        sub = edge_subgraph(G, sorted(remain))
        degs = sub.edge_count_degrees()
        support = np.nonzero(degs > 0)[0]
        if len(support) == 0:
            break
        d_avg = 2.0 * len(remain) / len(support)
        if d_avg < cfg.density_floor:
            break
        core = induced_subgraph(sub, support)
        try:
            pieces = regular_decomposition(core, rng, cfg)
        except DegenerateInput:
            break
        new_remain = set(remain)
        it_stats = {"remain_before": len(remain), "pieces": len(pieces)}
        for pc in pieces:
            res = partial_path_sparsify(pc.graph, k_partial, rng, cfg)
            # piece edge ids compose transitively back to G's edge ids
            to_G = pc.graph.orig_edge_ids
            for e in res.F:
                F.add(int(to_G[e]))
                new_remain.discard(int(to_G[e]))
            for e in res.covered:
                new_remain.discard(int(to_G[e]))
            # cut edges stay in new_remain
            if math.isfinite(res.alpha):
                report["claims"].append({"alpha": res.alpha, "beta": res.beta_len})
        remain = new_remain - F
        it_stats["remain_after"] = len(remain)
        report["iterations"].append(it_stats)
        it += 1
        if it_stats["remain_after"] >= it_stats["remain_before"]:
            break
    out = F | remain
    report["retained"] = len(out)
    report["deferred_tail"] = len(remain)
    # parallel copies of retained representatives are covered by definition
    return out, report


# ---------------------------------------------------------------------------
# verification oracle: Menger counts and greedy peeling


def vertex_disjoint_count(G, s, t):
    """Exact max number of internally-vertex-disjoint s-t paths.

    Unit-capacity max flow on the directed split graph: each vertex a
    becomes a^in -> a^out arc of capacity 1 (capacity n at s and t), each
    undirected edge {a,b} becomes a^out -> b^in and b^out -> a^in.
    """
    if s == t:
        raise ValueError("s and t must differ")
    n = G.n
    big = n + 1
    rows, cols, caps = [], [], []
    for a in range(n):
        rows.append(2 * a)
        cols.append(2 * a + 1)
        caps.append(big if a in (s, t) else 1)
    seen = set()
    for e in range(G.m):
        a, b = int(G.us[e]), int(G.vs[e])
        if a == b:
            continue
        key = (min(a, b), max(a, b))
        if key in seen:
            continue
        seen.add(key)
        rows += [2 * a + 1, 2 * b + 1]
        cols += [2 * b, 2 * a]
        caps += [1, 1]
    Cap = sp.csr_matrix((caps, (rows, cols)), shape=(2 * n, 2 * n))
    res = csgraph.maximum_flow(Cap, 2 * s + 1, 2 * t)
    return int(res.flow_value)


def _bfs_shortest_path(adj, blocked, u, v, skip_direct=False):
    """Shortest u-v path avoiding blocked internal vertices; None if absent.

    With skip_direct, the one-hop u-v step is ignored (a direct connection
    has no internal vertices and is accounted for separately by the
    caller)."""
    from collections import deque
    prev = {u: None}
    q = deque([u])
    while q:
        a = q.popleft()
        for b in adj[a]:
            if b in prev:
                continue
            if skip_direct and a == u and b == v:
                continue
            if b != v and blocked[b]:
                continue
            prev[b] = a
            if b == v:
                path = [v]
                while path[-1] != u:
                    path.append(prev[path[-1]])
                return path[::-1]
            q.append(b)
    return None


def verify_path_sparsifier(G, F, alpha, beta_len):
    """Check the (alpha, beta_len) claim for every edge outside F.

    For each missing edge: exact Menger count in (V, F) as the
    length-unbounded reference, and greedy BFS peeling as a sound lower
    bound on the number of disjoint paths of length <= beta_len.
    """
    F = set(int(e) for e in F)
    H = edge_subgraph(G, sorted(F))
    adj = [[] for _ in range(G.n)]
    for e in range(H.m):
        a, b = int(H.us[e]), int(H.vs[e])
        if a != b and b not in adj[a]:
            adj[a].append(b)
            adj[b].append(a)
    per_edge = []
    ok = True
    for e in range(G.m):
        if e in F or G.us[e] == G.vs[e]:
            continue
        u, v = int(G.us[e]), int(G.vs[e])
        menger = vertex_disjoint_count(H, u, v)
        blocked = np.zeros(G.n, dtype=bool)
        # a retained parallel edge is itself a disjoint path of length 1
        # with no internal vertices; count it once and skip it afterwards
        peeled = 1 if v in adj[u] and beta_len >= 1 else 0
        while True:
            path = _bfs_shortest_path(adj, blocked, u, v, skip_direct=True)
            if path is None or len(path) - 1 > beta_len:
                break
            peeled += 1
            for x in path[1:-1]:
                blocked[x] = True
        per_edge.append({"edge": e, "u": u, "v": v,
                         "menger": menger, "peeled": peeled})
        if peeled < alpha:
            ok = False
    return {"pass": ok, "alpha": alpha, "beta_len": beta_len,
            "checked": len(per_edge), "per_edge": per_edge}


# ---------------------------------------------------------------------------
# exact conductances (test oracles; exponential time)


def edge_conductance_exact(G):
    n = G.n
    deg = G.weighted_degrees()
    vol_tot = deg.sum()
    best = float("inf")
    for mask in range(1, 2 ** n - 1):
        S = [v for v in range(n) if mask >> v & 1]
        volS = deg[S].sum()
        cut = sum(G.ws[e] for e in G.boundary_edges(S))
        denom = min(volS, vol_tot - volS)
        if denom > 0:
            best = min(best, cut / denom)
    return best


def vertex_conductance_exact(G):
    n = G.n
    adj = [set() for _ in range(n)]
    for e in range(G.m):
        a, b = int(G.us[e]), int(G.vs[e])
        if a != b:
            adj[a].add(b)
            adj[b].add(a)
    best = float("inf")
    for mask in range(1, 2 ** n - 1):
        S = {v for v in range(n) if mask >> v & 1}
        boundary = set().union(*(adj[v] for v in S)) - S if S else set()
        denom = min(len(S), n - len(S))
        if denom > 0:
            best = min(best, len(boundary) / denom)
    return best
