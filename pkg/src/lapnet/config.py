"""Tunable constants for the whole pipeline.

Every quantity the underlying analysis leaves as "a sufficiently large
constant" or a polylog factor lives here, with two sets of values: the
ones the asymptotic analysis would use (`paper_defaults`) and the
desk-scale defaults that make preconditions satisfiable and runs finish
on graphs with n <= 1e4.  Reports serialize both so any deviation is
visible.
"""

import math
from dataclasses import dataclass, field, asdict

# Exponent minimizing the recursion's loglog exponent.
DEFAULT_P = math.sqrt(10.0) / 3.0 - 1.0 / 3.0


@dataclass
class SolverConfig:
    # top-level solve
    epsilon: float = 1e-8
    p: float = DEFAULT_P
    seed: int = 0

    # sampling / Richardson (Algorithm constants)
    sample_delta: float = 0.1
    richardson_iters_coeff: float = 200.0
    size_check_coeff: float = 1600.0
    c_s: float = 4.0

    # recursion schedule
    eta_coeff: float = 8.0
    delta_exp: float = 0.05
    eta_max: float = 2.0           # desk-scale cap; the formula value explodes at small n
    C_kappa: float = 1.0
    base_case_edge_threshold: int = 512
    cg_tol: float = 1e-14
    max_depth: int = 12
    recursion_shrink_ratio: float = 0.9
    richardson_early_exit: bool = True
    agd_early_exit: bool = True
    # early-exit slack factors: the worst-case sandwich bound would use
    # (c_s ln n)^2; these empirical values are validated against the
    # dense oracle across seeds
    richardson_exit_slack: float = 16.0
    agd_exit_slack: float = 10.0

    # spectral-subgraph sparsity budget coefficient: |E(H)| <= n + c_spars*m/k
    c_spars: float = 12.0

    # path-sparsify constants
    C_unif: float = 3.0
    c_split: float = 2.0
    c_bip: float = 2.0
    density_floor: float = 8.0
    cut_fraction: float = 0.125
    phi_target: float = 0.05
    c_kp: float = 0.02             # k_partial = max(1, round(k * c_kp * ln(n)^3))
    c_iter: float = 4.0
    max_retries: int = 64

    # oracle / dense caps
    oracle_cap: int = 500
    dense_cap: int = 200

    debug_checks: bool = False

    def inner_error(self, n):
        """Accuracy requested from recursive inner solves inside Richardson."""
        ln = max(2.0, math.log(max(n, 3)))
        return 1.0 / (1600.0 * self.c_s ** 2 * ln ** 2)

    def k_partial(self, k, n):
        return max(1, int(round(k * self.c_kp * math.log(max(n, 3)) ** 3)))

    def kappa_envelope(self, measured, m, k, n):
        """kappa(m): measured ||tau||_p^p rounded up to the configured envelope."""
        ln = math.log(max(n, 3))
        env = self.C_kappa * m * max(1.0, math.log(max(k * ln, 3.0))) ** (4 * self.p / (1 - self.p))
        return max(measured, min(measured * 2.0, env))

    def to_dict(self):
        return asdict(self)


# The values the asymptotic statements would plug in, recorded for reports.
PAPER_DEFAULTS = {
    "richardson_iters_coeff": 200.0,
    "size_check_coeff": 1600.0,
    "eta_coeff": 8.0,
    "delta_exp": 0.05,
    "eta_max": float("inf"),
    "C_unif": "Theta(1) (large)",
    "c_split": "20 ln(4n)",
    "c_bip": "40 ln(2n)",
    "density_floor": "2000 ln^2(2n)",
    "c_kp": 1.0,
    "cut_fraction": 0.125,
    "p": DEFAULT_P,
}


def config_report(cfg: SolverConfig):
    """Both constant sets, for embedding into JSON reports."""
    return {"effective": cfg.to_dict(), "paper_defaults": PAPER_DEFAULTS}
