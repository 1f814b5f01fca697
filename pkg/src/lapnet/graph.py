"""Weighted multigraph core.

A WeightedMultiGraph stores parallel edge arrays (us, vs, ws) so that edge
ids are stable positions; subgraph operations carry id-translation tables
(`orig_edge_ids`, `orig_vertex_ids`) so per-edge data indexed by the
original graph survives surgery.

Degree convention: a self-loop of weight w contributes w to its vertex's
degree (and hence to volumes) but is invisible to the Laplacian.
"""

import numpy as np
import scipy.sparse as sp
from dataclasses import dataclass, field


class WeightedMultiGraph:
    def __init__(self, n, us, vs, ws, orig_edge_ids=None, orig_vertex_ids=None):
        self.n = int(n)
        self.us = np.asarray(us, dtype=np.int64)
        self.vs = np.asarray(vs, dtype=np.int64)
        self.ws = np.asarray(ws, dtype=np.float64)
        if self.us.shape != self.vs.shape or self.us.shape != self.ws.shape:
            raise ValueError("edge arrays must have equal length")
        if len(self.us) and (self.us.min() < 0 or self.us.max() >= self.n
                             or self.vs.min() < 0 or self.vs.max() >= self.n):
            raise ValueError("edge endpoint out of range")
        if len(self.ws) and (not np.all(np.isfinite(self.ws)) or self.ws.min() <= 0):
            raise ValueError("edge weights must be positive and finite")
        # id-translation back to the graph this one was cut out of
        self.orig_edge_ids = (np.arange(len(self.us)) if orig_edge_ids is None
                              else np.asarray(orig_edge_ids, dtype=np.int64))
        self.orig_vertex_ids = (np.arange(self.n) if orig_vertex_ids is None
                                else np.asarray(orig_vertex_ids, dtype=np.int64))
        self._adj = None
        self._lap = None

    # -- basic accessors -------------------------------------------------
    @property
    def m(self):
        return len(self.us)

    def edge(self, e):
        return int(self.us[e]), int(self.vs[e]), float(self.ws[e])

    def is_self_loop(self, e):
        return self.us[e] == self.vs[e]

    def weighted_degrees(self):
        deg = np.zeros(self.n)
        loops = self.us == self.vs
        np.add.at(deg, self.us[~loops], self.ws[~loops])
        np.add.at(deg, self.vs[~loops], self.ws[~loops])
        np.add.at(deg, self.us[loops], self.ws[loops])  # self-loop counts once
        return deg

    def edge_count_degrees(self):
        """Degrees counting multiplicity with unit weight per edge."""
        deg = np.zeros(self.n, dtype=np.int64)
        loops = self.us == self.vs
        np.add.at(deg, self.us[~loops], 1)
        np.add.at(deg, self.vs[~loops], 1)
        np.add.at(deg, self.us[loops], 1)
        return deg

    def volume(self, S=None):
        deg = self.weighted_degrees()
        if S is None:
            return float(deg.sum())
        S = np.asarray(list(S), dtype=np.int64)
        return float(deg[S].sum()) if len(S) else 0.0

    def boundary_edges(self, S):
        """Edge ids with exactly one endpoint in S (self-loops never cross)."""
        mask = np.zeros(self.n, dtype=bool)
        mask[np.asarray(list(S), dtype=np.int64)] = True
        cross = mask[self.us] != mask[self.vs]
        return np.nonzero(cross)[0]

    # -- adjacency / BFS -------------------------------------------------
    def adjacency(self):
        """CSR-style incidence: for vertex v, (neighbors, edge ids) sorted by
        (neighbor id, edge id).  Self-loops appear once."""
        if self._adj is None:
            loops = self.us == self.vs
            src = np.concatenate([self.us, self.vs[~loops]])
            dst = np.concatenate([self.vs, self.us[~loops]])
            eid = np.concatenate([np.arange(self.m), np.nonzero(~loops)[0]])
            order = np.lexsort((eid, dst, src))
            src, dst, eid = src[order], dst[order], eid[order]
            indptr = np.zeros(self.n + 1, dtype=np.int64)
            np.add.at(indptr, src + 1, 1)
            np.cumsum(indptr, out=indptr)
            self._adj = (indptr, dst, eid)
        return self._adj

    def neighbors(self, v):
        indptr, dst, eid = self.adjacency()
        return dst[indptr[v]:indptr[v + 1]], eid[indptr[v]:indptr[v + 1]]

    # -- matrices --------------------------------------------------------
    def laplacian(self):
        if self._lap is None:
            keep = self.us != self.vs
            u, v, w = self.us[keep], self.vs[keep], self.ws[keep]
            rows = np.concatenate([u, v, u, v])
            cols = np.concatenate([v, u, u, v])
            vals = np.concatenate([-w, -w, w, w])
            self._lap = sp.csr_matrix((vals, (rows, cols)), shape=(self.n, self.n))
        return self._lap

    def laplacian_dense(self):
        return self.laplacian().toarray()

    def components(self):
        keep = self.us != self.vs
        A = sp.csr_matrix((np.ones(keep.sum()), (self.us[keep], self.vs[keep])),
                          shape=(self.n, self.n))
        ncomp, labels = sp.csgraph.connected_components(A, directed=False)
        return ncomp, labels

    def is_connected(self):
        return self.components()[0] <= 1

    def copy_unweighted(self):
        return WeightedMultiGraph(self.n, self.us, self.vs, np.ones(self.m),
                                  self.orig_edge_ids, self.orig_vertex_ids)

    def reweighted(self, ws):
        return WeightedMultiGraph(self.n, self.us, self.vs, ws,
                                  self.orig_edge_ids, self.orig_vertex_ids)


def build_graph(n, edge_list):
    """Construct a graph from (u, v, w) triples; edge ids follow list order."""
    if edge_list:
        us, vs, ws = zip(*edge_list)
    else:
        us, vs, ws = [], [], []
    return WeightedMultiGraph(n, us, vs, ws)


def laplacian_matvec(G, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (G.n,):
        raise ValueError("dimension mismatch")
    return G.laplacian() @ x


@dataclass
class RootedForest:
    """BFS forest: parent pointers, parent edge ids, depths, roots."""
    parent: np.ndarray       # -1 at roots and at vertices outside the forest
    parent_edge: np.ndarray  # -1 where parent is -1
    depth: np.ndarray        # -1 outside the forest
    roots: list = field(default_factory=list)

    def radius(self, root=None):
        inside = self.depth >= 0
        if root is None:
            return int(self.depth[inside].max()) if inside.any() else 0
        # max depth within the tree of `root`
        best = 0
        for v in np.nonzero(inside)[0]:
            r = v
            while self.parent[r] >= 0:
                r = self.parent[r]
            if r == root:
                best = max(best, int(self.depth[v]))
        return best

    def tree_vertices(self):
        """Map root -> sorted list of vertices in its tree."""
        comp = {}
        inside = np.nonzero(self.depth >= 0)[0]
        rootof = {}
        for v in inside:
            r = v
            path = []
            while self.parent[r] >= 0 and r not in rootof:
                path.append(r)
                r = self.parent[r]
            r = rootof.get(r, r)
            for x in path:
                rootof[x] = r
            rootof[v] = r
            comp.setdefault(r, []).append(int(v))
        return {r: sorted(vs) for r, vs in comp.items()}


def ball_and_tree(G, v, R):
    """Hop-count ball B_G(v, R) and a BFS tree spanning it.

    Ties are broken by smallest vertex id then smallest edge id, so the
    tree is a deterministic function of the graph.
    """
    if not (0 <= v < G.n):
        raise ValueError("vertex out of range")
    if R < 0:
        raise ValueError("radius must be nonnegative")
    parent = np.full(G.n, -1, dtype=np.int64)
    parent_edge = np.full(G.n, -1, dtype=np.int64)
    depth = np.full(G.n, -1, dtype=np.int64)
    depth[v] = 0
    frontier = [v]
    d = 0
    while frontier and d < R:
        nxt = []
        for a in sorted(frontier):
            nbrs, eids = G.neighbors(a)
            for b, e in zip(nbrs, eids):
                if depth[b] < 0:
                    depth[b] = d + 1
                    parent[b] = a
                    parent_edge[b] = e
                    nxt.append(int(b))
        frontier = nxt
        d += 1
    ball = set(int(x) for x in np.nonzero(depth >= 0)[0])
    return ball, RootedForest(parent, parent_edge, depth, roots=[int(v)])


@dataclass
class QuotientMap:
    vertex_to_supernode: np.ndarray
    edge_to_quotient_edge: np.ndarray


def quotient(G, groups):
    """Contract each group of vertices to one supernode.

    All edges survive (multi-edges and weights preserved); an edge becomes
    a self-loop iff both endpoints land in the same group.
    """
    label = np.full(G.n, -1, dtype=np.int64)
    for i, grp in enumerate(groups):
        for v in grp:
            if label[v] != -1:
                raise ValueError("groups are not a partition (duplicate vertex)")
            label[v] = i
    if (label < 0).any():
        raise ValueError("groups are not a partition (vertex missing)")
    Q = WeightedMultiGraph(len(groups), label[G.us], label[G.vs], G.ws.copy(),
                           orig_edge_ids=G.orig_edge_ids.copy())
    return Q, QuotientMap(label, np.arange(G.m))


def induced_subgraph(G, S):
    """Vertex-induced subgraph G[S] with vertices relabeled 0..|S|-1."""
    S = sorted(set(int(x) for x in S))
    newid = np.full(G.n, -1, dtype=np.int64)
    newid[S] = np.arange(len(S))
    keep = (newid[G.us] >= 0) & (newid[G.vs] >= 0)
    eids = np.nonzero(keep)[0]
    return WeightedMultiGraph(len(S), newid[G.us[eids]], newid[G.vs[eids]],
                              G.ws[eids],
                              orig_edge_ids=G.orig_edge_ids[eids],
                              orig_vertex_ids=G.orig_vertex_ids[np.asarray(S, dtype=np.int64)]
                              if len(S) else np.asarray([], dtype=np.int64))


def edge_subgraph(G, edge_ids):
    """Edge-induced subgraph on all n vertices."""
    eids = np.asarray(sorted(set(int(e) for e in edge_ids)), dtype=np.int64)
    return WeightedMultiGraph(G.n, G.us[eids], G.vs[eids], G.ws[eids],
                              orig_edge_ids=G.orig_edge_ids[eids],
                              orig_vertex_ids=G.orig_vertex_ids.copy())


def induced_subgraph_any(G, S=None, F=None):
    """Dispatch form: vertex-induced when S given, edge-induced when F given."""
    if (S is None) == (F is None):
        raise ValueError("pass exactly one of S (vertices) or F (edge ids)")
    return induced_subgraph(G, S) if S is not None else edge_subgraph(G, F)


# -- file formats --------------------------------------------------------

def write_edgelist(G, path):
    with open(path, "w") as f:
        f.write(f"{G.n} {G.m}\n")
        for u, v, w in zip(G.us, G.vs, G.ws):
            f.write(f"{int(u)} {int(v)} {float(w)!r}\n")


def read_edgelist(path):
    with open(path) as f:
        header = f.readline().split()
        if len(header) != 2:
            raise ValueError("bad edge-list header; expected 'n m'")
        n, m = int(header[0]), int(header[1])
        edges = []
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            u, v, w = line.split()
            edges.append((int(u), int(v), float(w)))
        if len(edges) != m:
            raise ValueError(f"edge count mismatch: header {m}, found {len(edges)}")
    return build_graph(n, edges)


def read_mtx(path):
    """Matrix Market symmetric coordinate Laplacian: off-diagonal -w -> edge w."""
    import scipy.io
    M = scipy.io.mmread(path).tocoo()
    if M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    n = M.shape[0]
    seen = set()
    edges = []
    for i, j, val in zip(M.row, M.col, M.data):
        if i == j or val == 0:
            continue
        key = (min(i, j), max(i, j))
        if key in seen:
            continue
        seen.add(key)
        if val > 0:
            raise ValueError("off-diagonal entries must be negative (Laplacian form)")
        edges.append((int(key[0]), int(key[1]), float(-val)))
    return build_graph(n, edges)


def read_graph(path, fmt="edgelist"):
    return read_mtx(path) if fmt == "mtx" else read_edgelist(path)


def write_vector(x, path):
    with open(path, "w") as f:
        for val in np.asarray(x, dtype=np.float64):
            f.write(f"{float(val)!r}\n")


def read_vector(path):
    with open(path) as f:
        return np.array([float(line) for line in f if line.strip()])
