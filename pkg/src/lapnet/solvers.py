"""Laplacian solvers: sampling, elimination, Richardson, AGD, recursion.

The stack, bottom to top:
  - sample_preconditioner: randomized preconditioner Z = base + scaled
    multinomial draws of edges proportional to their overestimates tau.
  - eliminate_and_solve: exact partial Cholesky of degree-<=2 vertices,
    inner solve on the core, exact back-substitution.
  - precon_richardson: preconditioned Richardson iteration with a fresh
    sampled preconditioner each step.
  - precon_noisy_agd: accelerated gradient descent with a noisy
    preconditioner solve (three-sequence recursion).
  - recursive_solver: ties it together -- spectral subgraph H, boosted
    graph G' = G + (eta-1)H, Richardson on G' as the AGD preconditioner,
    recursing on the sampled cores; conjugate gradient at the base case.

All randomness flows from one master seed through named streams, so
recursive calls share no randomness.
"""

import math
import time
import zlib
import numpy as np
import scipy.sparse.linalg as spla
from dataclasses import dataclass, field

from .graph import WeightedMultiGraph, build_graph, induced_subgraph
from .config import SolverConfig
from .spectral_subgraph import spectral_subgraph
from .pathsparsify import path_sparsify


def named_rng(seed, *names):
    """Independent generator derived from a master seed and a name path."""
    keys = [zlib.crc32(str(x).encode()) for x in names]
    return np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFF] + keys))


@dataclass
class SolveReport:
    iterations: dict = field(default_factory=dict)     # level -> count
    errors: list = field(default_factory=list)         # error trajectory
    sampled_edge_counts: list = field(default_factory=list)
    wall_time: float = 0.0
    levels: list = field(default_factory=list)

    def to_dict(self):
        return {"iterations": self.iterations, "errors": self.errors,
                "sampled_edge_counts": self.sampled_edge_counts,
                "wall_time": self.wall_time, "levels": self.levels}


@dataclass
class AgdSchedule:
    kappa: float

    def __post_init__(self):
        k = self.kappa
        if k < 1:
            raise ValueError("kappa must be >= 1")
        self.alpha = 2 * math.sqrt(k) / (1 + 2 * math.sqrt(k))
        self.eta_agd = 2 * k
        self.beta_agd = 1 - 1 / (2 * math.sqrt(k))

    def iterations(self, epsilon):
        return max(1, math.ceil(4 * math.sqrt(self.kappa) * math.log(2.0 / epsilon)))


# ---------------------------------------------------------------------------
# sampling


def sample_preconditioner(G, Gprime_base, tau, delta, rng):
    """Z = base + multinomial draws over G's edges, each adding (delta/tau_e) w_e.

    s = sum tau, t = s/delta, r uniform in [t, 2t-1]; the number of
    distinct sampled edges is recorded on the result as
    `sampled_distinct`.
    """
    if not (0 < delta < 1):
        raise ValueError("delta must be in (0,1)")
    tau = np.asarray(tau, dtype=np.float64)
    s = float(tau.sum())
    if s <= 0:
        Z = WeightedMultiGraph(Gprime_base.n, Gprime_base.us, Gprime_base.vs,
                               Gprime_base.ws)
        Z.sampled_distinct = 0
        return Z
    t = s / delta
    pvec = tau / s
    if t <= 1e7:
        lo = max(1, int(math.ceil(t)))
        r = int(rng.integers(lo, max(lo + 1, int(2 * t))))
        counts = rng.multinomial(r, pvec).astype(np.float64)
    else:
        # too many draws to simulate exactly: per-edge counts are very
        # tightly concentrated, so use their Poisson limit (and the mean
        # itself once even that is astronomically large)
        r = t * float(rng.uniform(1.0, 2.0))
        lam = r * pvec
        counts = np.where(lam > 1e6, lam,
                          rng.poisson(np.minimum(lam, 1e6)).astype(np.float64))
    hit = np.nonzero(counts)[0]
    add_w = counts[hit] * (delta / tau[hit]) * G.ws[hit]
    us = np.concatenate([Gprime_base.us, G.us[hit]])
    vs = np.concatenate([Gprime_base.vs, G.vs[hit]])
    ws = np.concatenate([Gprime_base.ws, add_w])
    Z = WeightedMultiGraph(max(G.n, Gprime_base.n), us, vs, ws)
    Z.sampled_distinct = int(len(hit))
    return Z


# ---------------------------------------------------------------------------
# partial Cholesky elimination


def _merged_simple_edges(G):
    """Parallel edges merged, self-loops dropped: (us, vs, ws) arrays."""
    keep = G.us != G.vs
    a = np.minimum(G.us[keep], G.vs[keep]).astype(np.int64)
    c = np.maximum(G.us[keep], G.vs[keep]).astype(np.int64)
    key = a * G.n + c
    uniq, inv = np.unique(key, return_inverse=True)
    ws = np.zeros(len(uniq))
    np.add.at(ws, inv, G.ws[keep])
    return uniq // G.n, uniq % G.n, ws


def eliminate_and_solve(G, inner_solve, b, epsilon):
    """Eliminate degree-1/2 vertices exactly, inner-solve the core,
    back-substitute.  The elimination adds no error of its own."""
    n = G.n
    b = np.array(b, dtype=np.float64)
    mus, mvs, mws = _merged_simple_edges(G)
    deg = np.bincount(mus, minlength=n) + np.bincount(mvs, minlength=n)
    if deg.min(initial=3) >= 3:
        # nothing to eliminate; solve the merged graph directly
        core_graph = WeightedMultiGraph(n, mus, mvs, mws)
        ncomp, labels = core_graph.components()
        for c in range(ncomp):
            sel = labels == c
            b[sel] -= b[sel].mean()
        return inner_solve(core_graph, b, epsilon)
    # merged simple adjacency: W[u][v] = total weight
    W = [dict() for _ in range(n)]
    for u, v, w in zip(mus, mvs, mws):
        u, v, w = int(u), int(v), float(w)
        W[u][v] = W[u].get(v, 0.0) + w
        W[v][u] = W[v].get(u, 0.0) + w
    alive = np.ones(n, dtype=bool)
    log = []
    from collections import deque
    queue = deque(v for v in range(n) if len(W[v]) <= 2)
    while queue:
        v = queue.popleft()
        if not alive[v] or len(W[v]) > 2:
            continue
        nbrs = sorted(W[v].items())
        alive[v] = False
        if len(nbrs) == 0:
            log.append(("d0", v))
        elif len(nbrs) == 1:
            (u, w), = nbrs
            log.append(("d1", v, u, w, b[v]))
            b[u] += b[v]
            del W[u][v]
            if len(W[u]) <= 2:
                queue.append(u)
        else:
            (u1, w1), (u2, w2) = nbrs
            log.append(("d2", v, u1, u2, w1, w2, b[v]))
            wsum = w1 + w2
            b[u1] += (w1 / wsum) * b[v]
            b[u2] += (w2 / wsum) * b[v]
            del W[u1][v]
            del W[u2][v]
            wnew = w1 * w2 / wsum
            W[u1][u2] = W[u1].get(u2, 0.0) + wnew
            W[u2][u1] = W[u2].get(u1, 0.0) + wnew
            for u in (u1, u2):
                if len(W[u]) <= 2:
                    queue.append(u)
    x = np.zeros(n)
    core = np.nonzero(alive)[0]
    if len(core):
        idx = {int(v): i for i, v in enumerate(core)}
        eus, evs, ews = [], [], []
        for v in core:
            for u, w in W[v].items():
                if u > v:
                    eus.append(idx[int(v)])
                    evs.append(idx[int(u)])
                    ews.append(w)
        core_graph = WeightedMultiGraph(len(core), eus, evs, ews)
        bc = b[core].copy()
        ncomp, labels = core_graph.components()
        for c in range(ncomp):
            sel = labels == c
            bc[sel] -= bc[sel].mean()
        x[core] = inner_solve(core_graph, bc, epsilon)
    for rec in reversed(log):
        if rec[0] == "d0":
            x[rec[1]] = 0.0
        elif rec[0] == "d1":
            _, v, u, w, bv = rec
            x[v] = x[u] + bv / w
        else:
            _, v, u1, u2, w1, w2, bv = rec
            x[v] = (w1 * x[u1] + w2 * x[u2] + bv) / (w1 + w2)
    return x


# ---------------------------------------------------------------------------
# preconditioned Richardson


def precon_richardson(G, Gprime_base, tau, b, epsilon, inner_solver, rng,
                      cfg: SolverConfig = None, report: SolveReport = None):
    """x_{i+1} = x_i - (1/10) Z_i^+ (L_G x_i - b) with fresh sampled Z_i.

    Updates are skipped when the sample comes back too large.  With
    early exit enabled, stops once the preconditioner-measured residual
    energy is below epsilon times its initial value divided by the
    sandwich slack (c_s ln n)^2.
    """
    cfg = cfg or SolverConfig()
    b = np.asarray(b, dtype=np.float64)
    x = np.zeros(G.n)
    if epsilon >= 1:
        return x
    iters = max(1, math.ceil(cfg.richardson_iters_coeff * math.log(1.0 / epsilon)))
    tau = np.asarray(tau, dtype=np.float64)
    tau_norm = float(np.sum(tau ** cfg.p))
    size_limit = cfg.size_check_coeff * tau_norm + G.m
    L = G.laplacian()
    inner_eps = cfg.inner_error(G.n)
    slack = cfg.richardson_exit_slack
    q0 = None
    for i in range(iters):
        Z = sample_preconditioner(G, Gprime_base, tau, cfg.sample_delta, rng)
        if report is not None:
            report.sampled_edge_counts.append(Gprime_base.m + Z.sampled_distinct)
        if Gprime_base.m + Z.sampled_distinct > size_limit:
            continue
        r = L @ x - b
        y = eliminate_and_solve(Z, inner_solver, r, inner_eps)
        x = x - 0.1 * y
        if cfg.richardson_early_exit:
            q = abs(float(r @ y))
            if q0 is None:
                q0 = max(q, 1e-300)
            elif q <= epsilon * q0 / slack:
                break
    return x


# ---------------------------------------------------------------------------
# accelerated gradient descent with a noisy preconditioner


def precon_noisy_agd(apply_A, b, epsilon, solve_B, kappa,
                     early_exit=False, report: SolveReport = None,
                     exit_slack=10.0):
    """Three-sequence accelerated iteration for A x = b with a
    1/(10 kappa)-accurate preconditioner solve for B, A <= B <= kappa A."""
    if not (0 < epsilon < 1):
        raise ValueError("epsilon must be in (0,1)")
    sched = AgdSchedule(kappa)
    b = np.asarray(b, dtype=np.float64)
    x = np.zeros_like(b)
    v = np.zeros_like(b)
    T = sched.iterations(epsilon)
    q0 = None
    for t in range(T):
        y = sched.alpha * x + (1 - sched.alpha) * v
        r = apply_A(y) - b
        g = solve_B(r)
        x = y - g
        v = sched.beta_agd * v + (1 - sched.beta_agd) * (y - sched.eta_agd * g)
        if report is not None:
            report.errors.append(float(np.linalg.norm(r)))
        if early_exit:
            q = abs(float(r @ g))
            if q0 is None:
                q0 = max(q, 1e-300)
            elif q <= epsilon * q0 / (kappa * exit_slack):
                break
    return x


# ---------------------------------------------------------------------------
# base case


def cg_solve(G, b, tol=1e-14):
    """Conjugate gradient to relative residual `tol` (per component)."""
    b = np.array(b, dtype=np.float64)
    L = G.laplacian().tocsr()
    ncomp, labels = G.components()
    for c in range(ncomp):
        sel = labels == c
        b[sel] -= b[sel].mean()
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return np.zeros(G.n)
    # hand-rolled CG: avoids per-matvec wrapper overhead on small systems
    x = np.zeros(G.n)
    r = b.copy()
    p = r.copy()
    rs = float(r @ r)
    target = (tol * bnorm) ** 2
    ok = False
    for _ in range(30 * max(G.n, 10)):
        Lp = L @ p
        denom = float(p @ Lp)
        if denom <= 0:
            break
        a = rs / denom
        x += a * p
        r -= a * Lp
        rs_new = float(r @ r)
        if rs_new <= target:
            ok = True
            break
        p = r + (rs_new / rs) * p
        rs = rs_new
    if not (ok or rs <= target * 1e4) or not np.all(np.isfinite(x)):
        # dense fallback for stubborn small systems
        from .oracle import laplacian_pinv
        x = laplacian_pinv(G, cap=max(G.n, 1)) @ b
    for c in range(ncomp):
        sel = labels == c
        x[sel] -= x[sel].mean()
    return x


# ---------------------------------------------------------------------------
# recursive solver


def _solve_connected(G, b, epsilon, cfg, rng, depth, report):
    n, m = G.n, G.m
    if m <= cfg.base_case_edge_threshold or depth >= cfg.max_depth:
        if report is not None:
            report.levels.append({"depth": depth, "n": n, "m": m, "base": True})
        return cg_solve(G, b, cfg.cg_tol)
    ln = math.log(max(n, 3))
    k = max(2.0, cfg.c_spars * ln * ln)
    fn_rng = named_rng(int(rng.integers(2 ** 31)), "pathsparsify", depth)
    fn = lambda g: path_sparsify(g, max(2, int(k)), fn_rng, cfg)[0]
    D = spectral_subgraph(G, k, cfg.p, fn,
                          named_rng(int(rng.integers(2 ** 31)), "subgraph", depth),
                          cfg)
    kappa_m = cfg.kappa_envelope(D.kappa_measured, m, k, n)
    eta = cfg.eta_coeff * ((math.log(ln) * kappa_m / m)
                           ** (2.0 / (2 * cfg.p - 1) + cfg.delta_exp))
    eta = float(min(max(eta, 2.0), cfg.eta_max))
    in_H = np.zeros(m, dtype=bool)
    in_H[D.H] = True
    wp = np.where(in_H, eta * G.ws, G.ws)
    Gp = WeightedMultiGraph(n, G.us, G.vs, wp)
    etaH = WeightedMultiGraph(n, G.us[in_H], G.vs[in_H], eta * G.ws[in_H])
    tau_p = D.tau / eta
    if report is not None:
        report.levels.append({"depth": depth, "n": n, "m": m, "base": False,
                              "eta": eta, "H_edges": len(D.H),
                              "kappa_measured": D.kappa_measured})

    def rec_solver(g, bb, eps_inner):
        if g.m >= cfg.recursion_shrink_ratio * m:
            # recursion is not shrinking; fall back to a direct iterative
            # solve at the accuracy actually requested
            tol = max(cfg.cg_tol, 0.01 * math.sqrt(max(eps_inner, 0.0)))
            return cg_solve(g, bb, tol)
        return _solve_any(g, bb, eps_inner, cfg,
                          named_rng(int(rng.integers(2 ** 31)), "rec", depth + 1),
                          depth + 1, report)

    rich_rng = named_rng(int(rng.integers(2 ** 31)), "richardson", depth)

    def solve_B(r):
        return precon_richardson(Gp, etaH, tau_p, r, 1.0 / (10 * eta),
                                 rec_solver, rich_rng, cfg, report)

    L = G.laplacian()
    x = precon_noisy_agd(lambda z: L @ z, b, epsilon, solve_B, eta,
                         early_exit=cfg.agd_early_exit, report=report,
                         exit_slack=cfg.agd_exit_slack)
    if report is not None:
        report.iterations[depth] = report.iterations.get(depth, 0) + 1
    return x


def _solve_any(G, b, epsilon, cfg, rng, depth, report):
    b = np.array(b, dtype=np.float64)
    ncomp, labels = G.components()
    x = np.zeros(G.n)
    if ncomp == 1:
        bb = b - b.mean()
        x = _solve_connected(G, bb, epsilon, cfg, rng, depth, report)
        return x - x.mean()
    for c in range(ncomp):
        sel = np.nonzero(labels == c)[0]
        sub = induced_subgraph(G, sel)
        bc = b[sel] - b[sel].mean()
        xc = _solve_connected(sub, bc, epsilon, cfg, rng, depth, report)
        x[sel] = xc - xc.mean()
    return x


def recursive_solver(G, b, epsilon, cfg: SolverConfig = None, rng=None,
                     report: SolveReport = None):
    """epsilon-approximate solution of L_G x = b (expected A-norm error)."""
    cfg = cfg or SolverConfig()
    if rng is None:
        rng = named_rng(cfg.seed, "solve")
    b = np.asarray(b, dtype=np.float64)
    if not np.any(b):
        return np.zeros(G.n)
    t0 = time.time()
    x = _solve_any(G, b, epsilon, cfg, rng, 0, report)
    if report is not None:
        report.wall_time = time.time() - t0
    return x
