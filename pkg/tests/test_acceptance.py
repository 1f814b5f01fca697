"""End-to-end acceptance checks.

Each test prints exactly one PASS/FAIL summary line; run with -s to see
them as they complete.  Instances are seeded and fixed so that reruns
are reproducible.
"""

import itertools
import math
import time

import numpy as np

from lapnet import oracle
from lapnet.config import SolverConfig
from lapnet.decompose import check_decomposition_bounds, decompose
from lapnet.graph import WeightedMultiGraph, build_graph, edge_subgraph
from lapnet.pathsparsify import (partial_path_sparsify, uniform_sample_graph,
                                 verify_path_sparsifier, vertex_disjoint_count,
                                 vertex_conductance_exact)
from lapnet.solvers import (AgdSchedule, cg_solve, named_rng, precon_noisy_agd,
                            recursive_solver, sample_preconditioner)
from lapnet.spectral_subgraph import distortion_p, spectral_subgraph
from lapnet.pathsparsify import path_sparsify
from lapnet.ultrasparsify import (bss_augment, greedy_trace_removal,
                                  ultrasparsify, _phi_lower, _phi_upper)
from conftest import (complete_graph, erdos_renyi, grid_graph,
                      hypercube_graph, random_connected_graph,
                      random_regular_graph, relative_a_error)
from test_oracle import _two_tree_instance


def _line(num, desc, ok, detail=""):
    tag = "PASS" if ok else "FAIL"
    print(f"[{tag}] criterion {num}: {desc}{' -- ' + detail if detail else ''}",
          flush=True)


def _sq_a_error(G, x, xstar):
    num = oracle.a_norm_error(G, x, xstar)
    den = float(np.asarray(xstar) @ (G.laplacian() @ np.asarray(xstar)))
    return num / den if den > 0 else num


# -- 1: solver end-to-end -------------------------------------------------


def test_criterion_01_solver_end_to_end():
    instances = []
    for side in (16, 32, 64):
        instances.append((f"grid {side}x{side}", grid_graph(side)))
    for n in (1024, 4096):
        g_rng = np.random.default_rng(1000 + n)
        instances.append((f"8-regular n={n}", random_regular_graph(g_rng, 8, n)))
    worst_median, worst_wall = 0.0, 0.0
    ok = True
    for name, G in instances:
        errs = []
        for seed in range(20):
            rng = named_rng(seed, "accept1", name)
            b = rng.standard_normal(G.n)
            b -= b.mean()
            t0 = time.time()
            x = recursive_solver(G, b, 1e-8, SolverConfig(seed=seed),
                                 named_rng(seed, "accept1-solve", name))
            wall = time.time() - t0
            xstar = cg_solve(G, b, tol=1e-14)
            errs.append(_sq_a_error(G, x, xstar))
            worst_wall = max(worst_wall, wall)
            if wall >= 30.0:
                ok = False
        med = float(np.median(errs))
        worst_median = max(worst_median, med)
        if med > 1e-8:
            ok = False
    _line(1, "recursive solver, grids to 64x64 and 8-regular to n=4096", ok,
          f"worst median sq err {worst_median:.2e}, worst wall {worst_wall:.1f}s")
    assert ok


# -- 2: AGD schedule ------------------------------------------------------


def test_criterion_02_agd_schedule():
    eps = 1e-6
    ok = True
    worst = 0.0
    for kappa in (4.0, 16.0, 64.0):
        for seed in range(10):
            rng = np.random.default_rng(10 * int(kappa) + seed)
            G = random_connected_graph(rng, 50, 80, w_lo=0.5, w_hi=3.0)
            L = G.laplacian_dense()
            evals, evecs = np.linalg.eigh(L)
            lam2 = float(evals[1])
            c = (kappa - 1.0) * lam2
            # B = L + c * (projection off the all-ones kernel):
            # pencil eigenvalues (lam_i + c)/lam_i peak at exactly kappa
            inv_vals = np.zeros(G.n)
            inv_vals[1:] = 1.0 / (evals[1:] + c)
            Binv = (evecs * inv_vals) @ evecs.T
            b = rng.standard_normal(G.n)
            b -= b.mean()
            x = precon_noisy_agd(lambda z: L @ z, b, eps,
                                 lambda r: Binv @ r, kappa)
            xstar = oracle.pinv_solve(G, b)
            err = _sq_a_error(G, x, xstar)
            worst = max(worst, err)
            if err > eps:
                ok = False
    _line(2, "AGD hits epsilon within the scheduled iteration count", ok,
          f"worst sq err {worst:.2e} vs eps {eps}")
    assert ok


# -- 3: tau validity ------------------------------------------------------


def test_criterion_03_tau_validity():
    ok = True
    bad_edges = 0
    for i in range(50):
        rng = np.random.default_rng(300 + i)
        n = int(rng.integers(20, 301))
        G = random_connected_graph(rng, n, int(rng.integers(0, 2 * n)),
                                   w_lo=0.2, w_hi=5.0)
        k = float(rng.uniform(4.0, 40.0))
        p = float(rng.uniform(0.55, 0.95))
        fn_rng = named_rng(300 + i, "accept3", "path")
        fn = lambda g: path_sparsify(g, max(2, int(k)), fn_rng)[0]
        D = spectral_subgraph(G, k, p, fn, named_rng(300 + i, "accept3"))
        Hg = edge_subgraph(G, D.H)
        pinv = oracle.laplacian_pinv(Hg)
        for e in range(G.m):
            u, v = int(G.us[e]), int(G.vs[e])
            if u == v:
                continue
            r = pinv[u, u] + pinv[v, v] - 2 * pinv[u, v]
            if D.tau[e] < float(G.ws[e]) * r - 1e-9:
                bad_edges += 1
                ok = False
        if distortion_p(G, D.H, p) > D.kappa_measured + 1e-9:
            ok = False
    _line(3, "tau dominates subgraph resistance on 50 random graphs", ok,
          f"{bad_edges} violating edges")
    assert ok


# -- 4: decomposition invariants ------------------------------------------


def test_criterion_04_decompose_bounds():
    violations = 0
    for i in range(200):
        rng = np.random.default_rng(400 + i)
        n = int(rng.integers(5, 61))
        G = random_connected_graph(rng, n, int(rng.integers(0, 2 * n)))
        nb = int(rng.integers(1, 4))
        buckets = rng.integers(0, nb, G.m)
        beta = float(rng.uniform(0.02, 1.0 / 6.0))
        r = int(rng.integers(0, 10))
        dec = decompose(G.copy_unweighted(), buckets, nb, beta, r, debug=True)
        sizes = np.bincount(buckets, minlength=nb)
        try:
            check_decomposition_bounds(dec, beta, r, G.m,
                                       math.exp(-r * beta / nb), sizes)
        except AssertionError:
            violations += 1
    _line(4, "low-diameter decomposition bounds on 200 instances",
          violations == 0, f"{violations} violations")
    assert violations == 0


# -- 5: partial path sparsification ---------------------------------------


def test_criterion_05_partial_path_sparsify():
    cfg = SolverConfig(C_unif=1.0)          # scaled constants: p < 1 genuinely
    instances = []
    for i in range(15):
        instances.append((complete_graph(100 + 2 * i), 1 + i % 2))
    for i in range(15):
        rng = np.random.default_rng(500 + i)
        instances.append((erdos_renyi(rng, 100 + i, 0.85), 1))
    cut_ok = True
    certified, checked = 0, 0
    for idx, (G, k) in enumerate(instances):
        rng = named_rng(550 + idx, "accept5")
        res = partial_path_sparsify(G, k, rng, cfg, debug=True)
        assert res.p < 1.0, "instance failed the sampling precondition"
        if len(res.E_cut) > G.m / 2:
            cut_ok = False
        if not math.isfinite(res.alpha) or not res.covered:
            continue
        retained = res.F | res.E_cut
        ver = verify_path_sparsifier(G, retained, res.alpha, res.beta_len)
        for rec in ver["per_edge"]:
            checked += 1
            if rec["peeled"] >= res.alpha:
                certified += 1
    frac = certified / checked if checked else 1.0
    ok = cut_ok and frac >= 0.95 and checked > 0
    _line(5, "cut-size bound and peeling certification on 30 dense instances",
          ok, f"|E_cut| bound {'ok' if cut_ok else 'VIOLATED'}, "
              f"certified {certified}/{checked} ({100 * frac:.1f}%)")
    assert ok


# -- 6: uniform sampling sandwich -----------------------------------------


def test_criterion_06_uniform_sampling_sandwich():
    sandwich_hits, degree_hits, trials = 0, 0, 100
    tol = 1e-9
    for t in range(trials):
        rng = np.random.default_rng(600 + t)
        if t % 2 == 0:
            n = int(rng.integers(100, 201))
            G = complete_graph(n)
        else:
            n = int(rng.integers(100, 201))
            G = erdos_renyi(rng, n, float(rng.uniform(0.8, 0.95)))
        deg = G.edge_count_degrees()
        # the lemma holds for any d <= d_min; a smaller d means a larger
        # sampling probability and tight binomial concentration, which the
        # strict factor-2 degree window needs at these sizes
        d = max(int(deg.min()) // 5, 16)
        H = uniform_sample_graph(G.copy_unweighted(), d, rng)
        p = H.sample_p
        assert p < 1.0
        LG = G.copy_unweighted().laplacian_dense()
        LH = H.laplacian_dense()
        LK = n * np.eye(n) - np.ones((n, n))
        shift = (p * d / n) * LK
        lo = np.linalg.eigvalsh(p * LG - 0.5 * LH + shift).min()
        hi = np.linalg.eigvalsh(1.5 * LH + shift - p * LG).min()
        if lo >= -tol and hi >= -tol:
            sandwich_hits += 1
        dH = H.edge_count_degrees()
        if np.all(dH >= 0.5 * p * deg) and np.all(dH <= 2.0 * p * deg):
            degree_hits += 1
    ok = sandwich_hits >= 99 and degree_hits >= 99
    _line(6, "uniform sampling sandwich and degree window", ok,
          f"sandwich {sandwich_hits}/100, degrees {degree_hits}/100")
    assert ok


# -- 7: Richardson decay rate ---------------------------------------------


def test_criterion_07_richardson_rate():
    # manual loop x <- x - 0.1 Z^+ (Lx - b) with exact leverage scores and
    # exact pseudo-inverse preconditioner solves, mirroring the production
    # update without its early-exit machinery
    g_rng = np.random.default_rng(700)
    G = random_connected_graph(g_rng, 60, 120, w_lo=0.5, w_hi=2.0)
    pinv = oracle.laplacian_pinv(G)
    tau = np.empty(G.m)
    for e in range(G.m):
        u, v = int(G.us[e]), int(G.vs[e])
        r = pinv[u, u] + pinv[v, v] - 2 * pinv[u, v] if u != v else 0.0
        tau[e] = max(float(G.ws[e]) * r, 1e-12)
    b = g_rng.standard_normal(G.n)
    b -= b.mean()
    xstar = pinv @ b
    L = G.laplacian_dense()
    base = build_graph(G.n, [])
    iters, seeds = 15, 200
    sq = np.zeros((seeds, iters + 1))
    cfg = SolverConfig()
    for s in range(seeds):
        rng = named_rng(s, "accept7")
        x = np.zeros(G.n)
        sq[s, 0] = oracle.a_norm_error(G, x, xstar)
        for i in range(iters):
            Z = sample_preconditioner(G, base, tau, cfg.sample_delta, rng)
            x = x - 0.1 * oracle.pinv_solve(Z, L @ x - b)
            sq[s, i + 1] = oracle.a_norm_error(G, x, xstar)
    means = sq.mean(axis=0)
    ratios = means[1:] / means[:-1]
    bound = (1.0 - 1.0 / 200.0) * 1.05
    ok = bool(np.all(ratios <= bound))
    _line(7, "Richardson mean squared error decay rate", ok,
          f"worst per-iteration factor {ratios.max():.4f} vs bound {bound:.4f}")
    assert ok


# -- 8: ultrasparsifier ---------------------------------------------------


def test_criterion_08_ultrasparsifier():
    ok = True
    worst_pencil_frac = 0.0
    for i in range(20):
        rng = np.random.default_rng(800 + i)
        k = 2 + i % 3
        n = int(rng.integers(30, 101))
        m_extra = int(rng.integers(2 * n, min(6 * n, n * (n - 1) // 2 - n)))
        G = random_connected_graph(rng, n, m_extra, w_lo=0.2, w_hi=5.0)
        H = ultrasparsify(G, k, named_rng(800 + i, "accept8"))
        if H.m > n + 2 * n / k:
            ok = False
        if oracle.max_generalized_eigenvalue(H, G) > 1.0 + 1e-7:
            ok = False
        pencil = oracle.max_generalized_eigenvalue(G, H)
        worst_pencil_frac = max(worst_pencil_frac, pencil / (108.0 * k * k))
        if pencil > 108.0 * k * k * (1 + 1e-7):
            ok = False
        # explicit removal-trace bound on the same whitened vectors
        L = G.laplacian_dense()
        M = L + np.ones((n, n))
        evals, evecs = np.linalg.eigh(M)
        Mhalf_inv = (evecs / np.sqrt(evals)) @ evecs.T
        Bv = np.zeros((G.m, n))
        Bv[np.arange(G.m), G.us] += 1.0
        Bv[np.arange(G.m), G.vs] -= 1.0
        V = (Bv * np.sqrt(G.ws)[:, None]) @ Mhalf_inv
        Vall = np.vstack([V, Mhalf_inv @ np.ones(n)])
        _, _, final_tr = greedy_trace_removal(Vall, k)
        if final_tr > len(Vall) * k * (1 + 1e-9):
            ok = False
    _line(8, "ultrasparsifier size, domination, pencil, and trace bounds", ok,
          f"worst pencil at {100 * worst_pencil_frac:.1f}% of 108 k^2")
    assert ok


# -- 9: BSS potentials ----------------------------------------------------


def test_criterion_09_bss_potentials():
    violations, steps = 0, 0
    for i in range(10):
        rng = np.random.default_rng(900 + i)
        n = int(rng.integers(6, 16))
        V = rng.standard_normal((4 * n, n)) / math.sqrt(4 * n)
        A = V.T @ V
        A /= np.linalg.eigvalsh(A).max() * 1.01
        evals = np.linalg.eigvalsh(A)
        kappa = float(np.sum(1.0 / evals))
        q = min(0.05, (n - 1) / (kappa + 2 * n))
        adds = bss_augment(A, V, q)
        # replay the schedule and recheck both potentials independently
        gamma_U, gamma_L = float(n), kappa
        dU, dL = 1.0 / n, 1.0 / (2 * n + kappa)
        u, l = 2.0, 0.0
        M = A.copy()
        for j, (idx, t) in enumerate(adds):
            u += dU
            l += dL
            M += t * np.outer(V[idx], V[idx])
            steps += 1
            if _phi_upper(M, u) > gamma_U * (1 + 1e-9):
                violations += 1
            if _phi_lower(M, l) > gamma_L * (1 + 1e-9):
                violations += 1
    _line(9, "BSS barrier potentials bounded at every step",
          violations == 0, f"{violations} violations over {steps} steps")
    assert violations == 0


# -- 10: vertex expansion to disjoint paths -------------------------------


def _phi_vert_upper_q5(G):
    """Upper bound on vertex conductance from a structured candidate set:
    Hamming balls, coordinate half-cubes, and random subsets."""
    n = G.n
    adj = [set() for _ in range(n)]
    for e in range(G.m):
        a, b = int(G.us[e]), int(G.vs[e])
        adj[a].add(b)
        adj[b].add(a)

    def phi(S):
        boundary = set().union(*(adj[v] for v in S)) - S
        denom = min(len(S), n - len(S))
        return len(boundary) / denom if denom else float("inf")

    best = float("inf")
    for center in range(n):
        ball = {center}
        for _ in range(2):
            ball = ball | set().union(*(adj[v] for v in ball))
            if len(ball) <= n - 1:
                best = min(best, phi(ball))
    for bit in range(5):
        best = min(best, phi({v for v in range(n) if v >> bit & 1}))
    rng = np.random.default_rng(1005)
    for _ in range(3000):
        size = int(rng.integers(1, n))
        S = set(map(int, rng.choice(n, size=size, replace=False)))
        best = min(best, phi(S))
    return best


def test_criterion_10_vertex_expansion_paths():
    ok = True
    details = []
    for dim in (4, 5):
        G = hypercube_graph(dim)
        if dim == 4:
            phi_vert = vertex_conductance_exact(G)
        else:
            # exhaustive enumeration of 2^32 subsets is out of reach; an
            # upper bound on phi_vert only makes the requirement stronger
            phi_vert = _phi_vert_upper_q5(G)
        need = phi_vert * dim / 8.0
        worst = float("inf")
        for s in range(G.n):
            for t in range(s + 1, G.n):
                c = vertex_disjoint_count(G, s, t)
                worst = min(worst, c)
                if c < need:
                    ok = False
        details.append(f"Q{dim}: phi_vert={phi_vert:.3f}, "
                       f"need {need:.2f}, min count {worst}")
    _line(10, "hypercube vertex-disjoint path counts", ok, "; ".join(details))
    assert ok


# -- 11: effective-resistance facts ---------------------------------------


def test_criterion_11_resistance_facts():
    tri_bad = mono_bad = 0
    for i in range(500):
        rng = np.random.default_rng(1100 + i)
        n = int(rng.integers(4, 61))
        G = random_connected_graph(rng, n, n, w_lo=0.2, w_hi=5.0)
        pinv = oracle.laplacian_pinv(G)
        a, b, c = map(int, rng.choice(n, size=3, replace=False))
        rab = oracle.effective_resistance(G, a, b, pinv=pinv)
        rbc = oracle.effective_resistance(G, b, c, pinv=pinv)
        rac = oracle.effective_resistance(G, a, c, pinv=pinv)
        if rac > rab + rbc + 1e-9:
            tri_bad += 1
        keep = [e for e in range(G.m) if rng.random() < 0.7]
        H = edge_subgraph(G, keep)
        _, labels = H.components()
        if labels[a] == labels[b]:
            if rab > oracle.effective_resistance(H, a, b) + 1e-9:
                mono_bad += 1
    tree_bad = 0
    combos = list(itertools.product((1, 2, 3), (1, 2, 4, 5), (2, 3, 5)))
    runs = 0
    for rep in range(3):
        for depth, k_paths, path_len in combos:
            if runs >= 100:
                break
            w = (0.5, 1.0, 2.0)[rep]
            G, a, b = _two_tree_instance(None, depth, k_paths, path_len, w=w)
            d = 2 * depth / w
            ell = path_len / w
            runs += 1
            if oracle.effective_resistance(G, a, b) > 2 * d + ell / k_paths + 1e-9:
                tree_bad += 1
    ok = tri_bad == 0 and mono_bad == 0 and tree_bad == 0
    _line(11, "resistance triangle/monotone facts and two-tree bound", ok,
          f"triangle {tri_bad}, monotone {mono_bad}, "
          f"two-tree {tree_bad} violations over 500+{runs} instances")
    assert ok
