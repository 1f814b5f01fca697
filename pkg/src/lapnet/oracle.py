"""Dense verification oracle.

Deliberately slow and simple: eigendecomposition pseudoinverses, exact
effective resistances, and PSD sandwich checks.  Used by tests and the
`verify` CLI subcommand, never on the hot path.
"""

import numpy as np

DEFAULT_CAP = 500
EIG_CUTOFF = 1e-10
SANDWICH_TOL = 1e-9


class OracleCapExceeded(Exception):
    pass


def _check_cap(n, cap):
    if n > cap:
        raise OracleCapExceeded(f"n={n} exceeds oracle cap {cap}")


def project_to_range(G, b):
    """Project b onto the orthogonal complement of each component's ones vector."""
    b = np.array(b, dtype=np.float64)
    ncomp, labels = G.components()
    for c in range(ncomp):
        idx = labels == c
        b[idx] -= b[idx].mean()
    return b


def laplacian_pinv(G, cap=DEFAULT_CAP):
    _check_cap(G.n, cap)
    L = G.laplacian_dense()
    evals, evecs = np.linalg.eigh(L)
    lam_max = max(evals.max(), 1.0)
    inv = np.where(evals > EIG_CUTOFF * lam_max, 1.0 / np.where(evals == 0, 1, evals), 0.0)
    inv[evals <= EIG_CUTOFF * lam_max] = 0.0
    return (evecs * inv) @ evecs.T


def pinv_solve(G, b, cap=DEFAULT_CAP):
    """Exact L_G^+ b (up to dense eigensolve precision)."""
    _check_cap(G.n, cap)
    b = project_to_range(G, b)
    return laplacian_pinv(G, cap) @ b


def effective_resistance(G, u, v, cap=DEFAULT_CAP, pinv=None):
    _check_cap(G.n, cap)
    if u == v:
        return 0.0
    ncomp, labels = G.components()
    if labels[u] != labels[v]:
        return float("inf")
    if pinv is None:
        pinv = laplacian_pinv(G, cap)
    return float(pinv[u, u] + pinv[v, v] - 2 * pinv[u, v])


def a_norm_error(G, x, xstar):
    d = np.asarray(x, dtype=np.float64) - np.asarray(xstar, dtype=np.float64)
    return float(d @ (G.laplacian() @ d))


def _min_eig_on_common_range(D, kernel_basis):
    """Smallest eigenvalue of symmetric D restricted orthogonal to kernel_basis."""
    n = D.shape[0]
    if kernel_basis is not None and kernel_basis.shape[1] > 0:
        # orthonormal complement of the kernel
        Q, _ = np.linalg.qr(kernel_basis)
        P = np.eye(n) - Q @ Q.T
        evalsP, evecsP = np.linalg.eigh(P)
        basis = evecsP[:, evalsP > 0.5]
        D = basis.T @ D @ basis
    if D.shape[0] == 0:
        return 0.0
    return float(np.linalg.eigvalsh(D).min())


def _components_kernel(G):
    ncomp, labels = G.components()
    K = np.zeros((G.n, ncomp))
    for c in range(ncomp):
        K[labels == c, c] = 1.0
    return K


def spectral_sandwich(Glo, Gmid, Ghi, c_lo, c_hi, cap=DEFAULT_CAP, tol=SANDWICH_TOL):
    """True iff c_lo*L_Glo <= L_Gmid <= c_hi*L_Ghi in the PSD order.

    Decided by the smallest eigenvalue of each difference restricted to
    the common range (orthogonal complement of shared kernel vectors),
    with relative tolerance `tol`.
    """
    for G in (Glo, Gmid, Ghi):
        _check_cap(G.n, cap)
    Llo, Lmid, Lhi = Glo.laplacian_dense(), Gmid.laplacian_dense(), Ghi.laplacian_dense()
    scale = max(np.abs(Llo).max(), np.abs(Lmid).max(), np.abs(Lhi).max(), 1.0)

    D1 = Lmid - c_lo * Llo
    K1 = np.hstack([_components_kernel(Gmid), _components_kernel(Glo)])
    if _min_eig_on_common_range(D1, K1) < -tol * scale:
        return False
    D2 = c_hi * Lhi - Lmid
    K2 = np.hstack([_components_kernel(Gmid), _components_kernel(Ghi)])
    if _min_eig_on_common_range(D2, K2) < -tol * scale:
        return False
    return True


def psd_sandwich_matrices(Alo, Amid, Ahi, c_lo, c_hi, tol=SANDWICH_TOL):
    """Matrix form of spectral_sandwich for callers holding dense PSD matrices."""
    scale = max(np.abs(Alo).max(), np.abs(Amid).max(), np.abs(Ahi).max(), 1.0)
    if float(np.linalg.eigvalsh(Amid - c_lo * Alo).min()) < -tol * scale:
        return False
    if float(np.linalg.eigvalsh(c_hi * Ahi - Amid).min()) < -tol * scale:
        return False
    return True


def max_generalized_eigenvalue(G, H, cap=DEFAULT_CAP):
    """lambda_max of the (L_G, L_H) pencil on the range of L_H.

    Requires ker(L_H) to be contained in ker(L_G) for a finite answer.
    """
    _check_cap(G.n, cap)
    LG, LH = G.laplacian_dense(), H.laplacian_dense()
    evals, evecs = np.linalg.eigh(LH)
    lam_max = max(evals.max(), 1.0)
    pos = evals > EIG_CUTOFF * lam_max
    # leakage of L_G outside range(L_H) means the pencil is unbounded
    kerH = evecs[:, ~pos]
    if kerH.shape[1]:
        leak = np.abs(kerH.T @ LG @ kerH).max() if kerH.size else 0.0
        if leak > 1e-8 * lam_max:
            return float("inf")
    B = evecs[:, pos]
    Hhalf_inv = B * (1.0 / np.sqrt(evals[pos]))
    Mred = Hhalf_inv.T @ LG @ Hhalf_inv
    return float(np.linalg.eigvalsh(Mred).max())
