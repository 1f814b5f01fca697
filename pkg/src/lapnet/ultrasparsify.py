"""Dense-scale ultrasparsifier: few edges, bounded condition number.

Construction chain, all in the whitened space of M = L_G + 11^T where
every edge vector is v_e = sqrt(w_e) M^{-1/2} b_e and the vectors (plus
the whitened ones vector) sum to the identity:

  1. optional leverage-score sparsification of dense inputs down to
     ~16n edges with a verified two-sided sandwich;
  2. greedy Sherman-Morrison removal down to n + ceil(n/k) vectors while
     the trace tr[B^{-1}] stays under mk;
  3. BSS barrier-function augmentation adding s = ceil((kappa+2n)q)
     reweighted vectors so that qI <= B' <= 3I with q = 1/(18k^2).

Un-whitening and rescaling yields H with at most n + 2n/k edges,
L_H <= L_G, and generalized eigenvalues bounded by 108 k^2.

Everything here is dense and cubic by design: this module is an
existence-checker for small n, not a fast algorithm.
"""

import math
import numpy as np
from dataclasses import dataclass, field

from .graph import WeightedMultiGraph


class NumericalFailure(Exception):
    pass


DENSE_CAP = 200
REFRESH_EVERY = 50
REMOVAL_TOL = 1e-9


@dataclass
class RemovalTrace:
    traces: list = field(default_factory=list)   # tr[B^{-1}A] after each removal
    sizes: list = field(default_factory=list)


def greedy_trace_removal(vectors, k, trace=None):
    """Select |S| = n + ceil(n/k) of the m rows, greedily removing the row
    whose Sherman-Morrison trace increase of tr[B^{-1}A] is smallest.

    A = sum of all outer products (full rank required).  Candidates whose
    removal would collapse the rank (1 - v^T B^{-1} v near zero) are
    skipped.  Asserts the per-step trajectory bound and the final bound
    tr[B^{-1}A] <= m k.
    """
    V = np.asarray(vectors, dtype=np.float64)
    m, n = V.shape
    target = n + math.ceil(n / k)
    A = V.T @ V
    if np.linalg.matrix_rank(A) < n:
        raise ValueError("vectors must span R^n")
    S = np.ones(m, dtype=bool)
    B = A.copy()
    Binv = np.linalg.inv(B)
    W = V @ Binv                        # rows: B^{-1} v_i (as row vectors)
    WA = W @ A
    steps = 0
    while int(S.sum()) > target:
        size = int(S.sum())
        den = 1.0 - np.einsum("ij,ij->i", W, V)
        num = np.einsum("ij,ij->i", W, WA)
        score = np.where(S & (den > REMOVAL_TOL), num / np.maximum(den, REMOVAL_TOL),
                         np.inf)
        i = int(np.argmin(score))
        if not np.isfinite(score[i]):
            raise NumericalFailure("no removable vector without rank collapse")
        tr_before = float(np.trace(Binv @ A))
        v = V[i]
        S[i] = False
        B -= np.outer(v, v)
        u = Binv @ v
        Wv = W @ v
        Binv += np.outer(u, u) / den[i]
        W += np.outer(Wv, u) / den[i]
        WA += np.outer(Wv, A @ u) / den[i]
        steps += 1
        if steps % REFRESH_EVERY == 0:
            Binv = np.linalg.inv(B)
            W = V @ Binv
            WA = W @ A
        tr_after = tr_before + float(score[i])
        slack = size - n
        assert tr_after <= tr_before * (slack + 1) / slack + 1e-6 * tr_before, \
            "removal trajectory bound violated"
        if trace is not None:
            trace.traces.append(tr_after)
            trace.sizes.append(size - 1)
    Binv = np.linalg.inv(B)
    final_tr = float(np.trace(Binv @ A))
    assert final_tr <= m * k * (1 + 1e-9), \
        f"tr[B^-1 A] = {final_tr} exceeds mk = {m * k}"
    return np.nonzero(S)[0], B, final_tr


def _phi_upper(M, u):
    return float(np.trace(np.linalg.inv(u * np.eye(len(M)) - M)))


def _phi_lower(M, l):
    return float(np.trace(np.linalg.inv(M - l * np.eye(len(M)))))


def bss_augment(A, vectors, q):
    """Add s = ceil((kappa + 2n) q) reweighted rank-one terms to A so that
    q I <= A + additions <= 3 I, keeping both barrier potentials bounded
    at every step.  Returns the list of (index, weight) additions.
    """
    A = np.asarray(A, dtype=np.float64)
    V = np.asarray(vectors, dtype=np.float64)
    n = A.shape[0]
    evals = np.linalg.eigvalsh(A)
    if evals.min() <= 0 or evals.max() > 1 + 1e-9:
        raise ValueError("need 0 < A <= I")
    kappa = float(np.sum(1.0 / evals))
    s = math.ceil((kappa + 2 * n) * q)
    if s > n:
        raise ValueError("q too large: s exceeds n")
    gamma_U, gamma_L = float(n), kappa
    u, l = 2.0, 0.0
    dU, dL = 1.0 / n, 1.0 / (2 * n + kappa)
    M = A.copy()
    additions = []
    for _ in range(s):
        u += dU
        l += dL
        Cu = np.linalg.inv(u * np.eye(n) - M)
        Cl = np.linalg.inv(M - l * np.eye(n))
        phi_u = float(np.trace(Cu))
        phi_l = float(np.trace(Cl))
        VCu = V @ Cu
        a1 = np.einsum("ij,ij->i", VCu, V)
        a2 = np.einsum("ij,ij->i", VCu, VCu)
        VCl = V @ Cl
        b1 = np.einsum("ij,ij->i", VCl, V)
        b2 = np.einsum("ij,ij->i", VCl, VCl)
        # feasible t-interval per candidate, endpoints found by bisection
        DU = gamma_U - phi_u
        DL = phi_l - gamma_L

        def t_upper(i):
            # largest t with phi_u(M + t v v^T) <= gamma_U
            def f(t):
                d = 1.0 - t * a1[i]
                return np.inf if d <= 0 else t * a2[i] / d - DU
            hi = 1.0
            while f(hi) < 0 and hi < 1e12:
                hi *= 2
            lo = 0.0
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if f(mid) <= 0:
                    lo = mid
                else:
                    hi = mid
                if hi - lo < 1e-10:
                    break
            return lo

        def t_lower(i):
            # smallest t with phi_l(M + t v v^T) <= gamma_L
            if DL <= 0:
                return 0.0
            def g(t):
                d = 1.0 + t * b1[i]
                return DL - t * b2[i] / d
            hi = 1.0
            while g(hi) > 0 and hi < 1e12:
                hi *= 2
            if g(hi) > 0:
                return np.inf
            lo = 0.0
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if g(mid) > 0:
                    lo = mid
                else:
                    hi = mid
                if hi - lo < 1e-10:
                    break
            return hi

        best, best_i, best_t = -np.inf, None, None
        for i in range(len(V)):
            if a2[i] < 1e-14:
                continue
            tu = t_upper(i)
            tl = t_lower(i)
            if tu > tl and tu - tl > best:
                best, best_i, best_t = tu - tl, i, 0.5 * (tl + tu)
        if best_i is None:
            raise NumericalFailure("no feasible (index, weight) in BSS step")
        v = V[best_i]
        M += best_t * np.outer(v, v)
        additions.append((int(best_i), float(best_t)))
        assert _phi_upper(M, u) <= gamma_U * (1 + 1e-9), "upper potential violated"
        assert _phi_lower(M, l) <= gamma_L * (1 + 1e-9), "lower potential violated"
    evals = np.linalg.eigvalsh(M)
    assert evals.min() >= q * (1 - 1e-9) - 1e-12, \
        f"lower eigenvalue {evals.min()} below q = {q}"
    assert evals.max() <= 3.0 * (1 + 1e-9), \
        f"upper eigenvalue {evals.max()} above 3"
    return additions


def _leverage_sparsify(G, rng, target, max_retries=6):
    """Leverage-score sampling to about `target` edges.

    Returns (H, c_lo, c_hi) where the exact factors c_lo L_G <= L_H <=
    c_hi L_G are measured by the dense pencil oracle.  Draws are retried
    until the factor ratio is at most 2 (which the final pencil budget
    requires); if a target is too aggressive to certify, it is escalated,
    degenerating to H = G when the target reaches m."""
    from .oracle import max_generalized_eigenvalue
    n, m = G.n, G.m
    L = G.laplacian_dense()
    M = L + np.ones((n, n))
    Minv = np.linalg.inv(M)
    Bv = np.zeros((m, n))
    Bv[np.arange(m), G.us] += 1.0
    Bv[np.arange(m), G.vs] -= 1.0
    lev = np.einsum("ij,jk,ik->i", Bv, Minv, Bv) * G.ws
    lev = np.clip(lev, 1e-12, 1.0)
    while target < m:
        # scale alpha so that the expected kept count hits the target
        lo_a, hi_a = 1e-6, 1e12
        for _ in range(80):
            mid = math.sqrt(lo_a * hi_a)
            if float(np.minimum(1.0, mid * lev).sum()) < target:
                lo_a = mid
            else:
                hi_a = mid
        p = np.minimum(1.0, lo_a * lev)
        for _ in range(max_retries):
            keep = (rng.random(m) < p) | (p >= 1.0 - 1e-12)
            if keep.sum() == 0 or keep.sum() > 1.15 * target:
                continue
            H = WeightedMultiGraph(n, G.us[keep], G.vs[keep],
                                   G.ws[keep] / p[keep],
                                   orig_edge_ids=np.nonzero(keep)[0])
            if H.components()[0] != 1:
                continue
            c_hi = max_generalized_eigenvalue(H, G, cap=DENSE_CAP)
            c_lo = 1.0 / max_generalized_eigenvalue(G, H, cap=DENSE_CAP)
            if np.isfinite(c_hi) and c_lo > 0 and c_hi / c_lo <= 2.0:
                return H, c_lo, c_hi
        target = int(target * 1.3) + 1
    return WeightedMultiGraph(n, G.us, G.vs, G.ws), 1.0, 1.0


def ultrasparsify(G, k, rng=None):
    """Reweighted subgraph H with <= n + 2n/k edges, L_H <= L_G, and
    lambda_max of the (L_G, L_H) pencil at most 108 k^2."""
    from .oracle import spectral_sandwich
    if G.n > DENSE_CAP:
        raise ValueError(f"n={G.n} exceeds dense cap {DENSE_CAP}")
    if G.components()[0] != 1:
        raise ValueError("input must be connected")
    if k < 1:
        raise ValueError("k must be >= 1")
    rng = rng if rng is not None else np.random.default_rng(0)
    n = G.n
    budget = n + math.ceil(n / k)
    if G.m + 1 <= budget:
        return WeightedMultiGraph(n, G.us, G.vs, G.ws)
    # how many BSS additions still fit under the final n + 2n/k edge budget
    s_max = int(math.floor(n + 2.0 * n / k)) - (n - 1 + math.ceil(n / k))
    if G.m > 16 * n:
        Gpp, c_lo, c_hi = _leverage_sparsify(G, rng, 16 * n)
    else:
        Gpp, c_lo, c_hi = WeightedMultiGraph(n, G.us, G.vs, G.ws), 1.0, 1.0
    m = Gpp.m
    if m + 1 <= budget:
        Hraw = Gpp
        q = 1.0 / (18.0 * k * k)
    else:
        L = Gpp.laplacian_dense()
        M = L + np.ones((n, n))
        evals, evecs = np.linalg.eigh(M)
        Mhalf_inv = (evecs / np.sqrt(evals)) @ evecs.T
        Bv = np.zeros((m, n))
        Bv[np.arange(m), Gpp.us] += 1.0
        Bv[np.arange(m), Gpp.vs] -= 1.0
        V = (Bv * np.sqrt(Gpp.ws)[:, None]) @ Mhalf_inv
        ones_v = Mhalf_inv @ np.ones(n)
        Vall = np.vstack([V, ones_v])      # rows sum-of-outer = I
        sel, B, kappa = greedy_trace_removal(Vall, k)
        assert m in sel, "the ones vector must survive removal"
        q = 1.0 / (18.0 * k * k)
        # measured kappa (= tr[B^{-1}] in the whitened space) decides how
        # many additions BSS will make; they must fit the edge budget
        s = math.ceil((kappa + 2 * n) * q)
        if s > s_max:
            raise NumericalFailure(
                f"BSS would add {s} edges but only {s_max} fit the budget")
        additions = bss_augment(B, Vall, q)
        weight = np.zeros(m)
        for i in sel:
            if i < m:
                weight[i] += Gpp.ws[i]
        for i, t in additions:
            if i < m:
                weight[i] += t * Gpp.ws[i]
        kept = np.nonzero(weight > 0)[0]
        Hraw = WeightedMultiGraph(n, Gpp.us[kept], Gpp.vs[kept], weight[kept])
        assert Hraw.m <= n + 2 * n / k, \
            f"edge count {Hraw.m} exceeds n + 2n/k = {n + 2 * n / k}"
        assert spectral_sandwich(Gpp, Hraw, Gpp, q, 6.0, cap=DENSE_CAP), \
            "intermediate sandwich q L_G'' <= L_H' <= 6 L_G'' failed"
    H = WeightedMultiGraph(n, Hraw.us, Hraw.vs, Hraw.ws / (3.0 * c_hi))
    return H
