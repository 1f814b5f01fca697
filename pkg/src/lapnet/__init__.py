"""Laplacian system solvers via ultrasparse spectral subgraphs,
vertex-connectivity path sparsifiers, and dense ultrasparsifiers."""

__version__ = "0.1.0"

from .config import SolverConfig, DEFAULT_P, config_report
from .graph import (WeightedMultiGraph, build_graph, read_graph,
                    read_edgelist, write_edgelist, read_vector, write_vector,
                    edge_subgraph, induced_subgraph)
from .decompose import decompose
from .spectral_subgraph import AkpwParams, DistortionSubgraph, spectral_subgraph
from .pathsparsify import (path_sparsify, partial_path_sparsify,
                           regular_decomposition, expander_decompose,
                           verify_path_sparsifier, vertex_disjoint_count,
                           DegenerateInput)
from .solvers import (recursive_solver, cg_solve, SolveReport, named_rng,
                      sample_preconditioner, precon_richardson,
                      precon_noisy_agd, eliminate_and_solve)
from .ultrasparsify import (ultrasparsify, greedy_trace_removal, bss_augment,
                            NumericalFailure)

__all__ = [
    "SolverConfig", "DEFAULT_P", "config_report",
    "WeightedMultiGraph", "build_graph", "read_graph", "read_edgelist",
    "write_edgelist", "read_vector", "write_vector", "edge_subgraph",
    "induced_subgraph",
    "decompose",
    "AkpwParams", "DistortionSubgraph", "spectral_subgraph",
    "path_sparsify", "partial_path_sparsify", "regular_decomposition",
    "expander_decompose", "verify_path_sparsifier", "vertex_disjoint_count",
    "DegenerateInput",
    "recursive_solver", "cg_solve", "SolveReport", "named_rng",
    "sample_preconditioner", "precon_richardson", "precon_noisy_agd",
    "eliminate_and_solve",
    "ultrasparsify", "greedy_trace_removal", "bss_augment", "NumericalFailure",
]
