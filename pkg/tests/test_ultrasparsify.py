import math

import numpy as np
import pytest

from lapnet.graph import build_graph
from lapnet.oracle import max_generalized_eigenvalue
from lapnet.ultrasparsify import (NumericalFailure, RemovalTrace, bss_augment,
                                  greedy_trace_removal, ultrasparsify,
                                  _phi_lower, _phi_upper)
from conftest import complete_graph, path_graph, random_connected_graph


# -- greedy removal -------------------------------------------------------


def test_removal_noop_at_target_size():
    # m already equals n + ceil(n/k): nothing is removed, tr[B^-1 A] = n
    V = np.vstack([np.eye(4), np.eye(4)[:2]])
    sel, B, tr = greedy_trace_removal(V, 2)
    assert len(sel) == 6
    assert np.isclose(tr, 4.0)


def test_removal_duplicated_basis():
    V = np.vstack([np.eye(4)] * 3)          # m = 12, k = 1 -> target 8
    sel, B, tr = greedy_trace_removal(V, 1)
    assert len(sel) == 8
    assert tr <= 12 * 1 + 1e-9
    # B must stay full rank
    assert np.linalg.matrix_rank(B) == 4


def test_removal_requires_spanning_set():
    V = np.zeros((5, 3))
    V[:, :2] = np.random.default_rng(0).standard_normal((5, 2))
    with pytest.raises(ValueError):
        greedy_trace_removal(V, 2)


def test_removal_gaussian_trace_bound():
    rng = np.random.default_rng(1)
    V = rng.standard_normal((80, 20)) / math.sqrt(80)
    trace = RemovalTrace()
    sel, B, tr = greedy_trace_removal(V, 2, trace)
    assert len(sel) == 30                   # n + ceil(n/k) = 20 + 10
    assert tr <= 80 * 2 + 1e-9
    assert trace.sizes == list(range(79, 29, -1))
    evals = np.linalg.eigvalsh(B)
    assert evals.min() > 0


# -- BSS augmentation -----------------------------------------------------


def test_bss_single_addition():
    A = 0.5 * np.eye(4)                     # kappa = 8
    q = 0.01                                # s = ceil((8 + 8) * 0.01) = 1
    adds = bss_augment(A, np.eye(4), q)
    assert len(adds) == 1
    i, t = adds[0]
    M = A + t * np.outer(np.eye(4)[i], np.eye(4)[i])
    evals = np.linalg.eigvalsh(M)
    assert evals.min() >= q * (1 - 1e-9)
    assert evals.max() <= 3.0 + 1e-9


def test_bss_rejects_bad_inputs():
    with pytest.raises(ValueError):
        bss_augment(2.0 * np.eye(3), np.eye(3), 0.01)       # A > I
    with pytest.raises(ValueError):
        bss_augment(-0.1 * np.eye(3), np.eye(3), 0.01)      # A not PD
    with pytest.raises(ValueError):
        bss_augment(0.01 * np.eye(3), np.eye(3), 0.9)       # s exceeds n


def test_bss_potentials_bounded_on_random_instance():
    rng = np.random.default_rng(3)
    n = 10
    V = rng.standard_normal((40, n)) / math.sqrt(40)
    A = V.T @ V
    A /= np.linalg.eigvalsh(A).max() * 1.01
    kappa = float(np.sum(1.0 / np.linalg.eigvalsh(A)))
    q = min(0.02, (n - 1) / (kappa + 2 * n))
    adds = bss_augment(A, V, q)             # internal asserts check potentials
    assert len(adds) == math.ceil((kappa + 2 * n) * q)
    M = A.copy()
    for i, t in adds:
        M += t * np.outer(V[i], V[i])
        assert t > 0
    evals = np.linalg.eigvalsh(M)
    assert evals.min() >= q * (1 - 1e-9) - 1e-12
    assert evals.max() <= 3.0 + 1e-9


def test_initial_upper_potential_at_most_n():
    rng = np.random.default_rng(5)
    M = rng.standard_normal((6, 6))
    A = M @ M.T
    A /= np.linalg.eigvalsh(A).max()        # A <= I
    assert _phi_upper(A, 2.0) <= 6.0 + 1e-9
    assert _phi_lower(A, -1.0) > 0


# -- the full construction ------------------------------------------------


def test_tree_is_returned_unchanged():
    G = path_graph(10)
    H = ultrasparsify(G, 3)
    assert H.m == G.m
    assert np.array_equal(H.ws, G.ws)


def test_input_validation():
    with pytest.raises(ValueError):
        ultrasparsify(build_graph(4, [(0, 1, 1.0), (2, 3, 1.0)]), 2)
    with pytest.raises(ValueError):
        ultrasparsify(complete_graph(4), 0.5)


def _check_ultra(G, k):
    H = ultrasparsify(G, k, np.random.default_rng(7))
    n = G.n
    assert H.m <= n + 2 * n / k
    upper = max_generalized_eigenvalue(H, G)
    assert upper <= 1.0 + 1e-7              # L_H <= L_G
    pencil = max_generalized_eigenvalue(G, H)
    assert pencil <= 108.0 * k * k * (1 + 1e-7)
    return H, pencil


@pytest.mark.parametrize("k", [2, 4])
def test_complete_graph_k20(k):
    _check_ultra(complete_graph(20), k)


def test_small_complete_graph_sandwich():
    H, pencil = _check_ultra(complete_graph(6), 1)
    assert H.m <= 6 + 2 * 6      # n + 2n/k with k = 1
    assert pencil <= 108.0


def test_weighted_random_graph():
    rng = np.random.default_rng(11)
    G = random_connected_graph(rng, 40, 260, w_lo=0.2, w_hi=5.0)
    _check_ultra(G, 3)


def test_dense_input_goes_through_leverage_sampling():
    # m > 16 n triggers the pre-sparsification stage
    G = complete_graph(60)
    assert G.m > 16 * G.n
    H, _ = _check_ultra(G, 2)
    assert H.m <= 60 + 60
