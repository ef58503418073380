"""Numerical tolerances and the shared frequency grid.

Every rank, positivity, and equality decision in the toolkit goes through an
explicit tolerance collected here, so that nothing is buried as a magic
constant inside an algorithm.
"""

from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class Tolerances:
    """Tolerance knobs used by the solvers and checks.

    Relative tolerances are taken relative to a Frobenius-norm scale of the
    matrices involved (floored at 1), absolute ones are used as-is.
    """

    #: relative residual accepted from the Riccati solver
    are_residual_rtol: float = 1e-8
    #: relative residual accepted from the Lyapunov solver
    lyap_residual_rtol: float = 1e-9
    #: half-width of the strip around the imaginary axis treated as "on" it
    imag_axis_atol: float = 1e-8
    #: absolute tolerance for the C'D = 0 / D'D > 0 admissibility test
    orthogonality_atol: float = 1e-10
    #: relative threshold for PBH stabilizability singular values
    pbh_rtol: float = 1e-8
    #: relative threshold for rank decisions on Gramians
    rank_rtol: float = 1e-8
    #: eigenvalue real parts must be below minus this to count as stable
    hurwitz_margin: float = 0.0
    #: condition number beyond which a transfer evaluation is refused
    singular_cond_limit: float = 1e12
    #: relative agreement required between two realizations of one transfer
    equivalence_rtol: float = 1e-7
    #: absolute (scaled) ceiling for blocks that must vanish
    sparsity_atol: float = 1e-9
    #: state-norm guard that aborts a simulation
    divergence_limit: float = 1e9

    def with_(self, **kwargs) -> "Tolerances":
        return replace(self, **kwargs)


DEFAULT_TOLERANCES = Tolerances()

#: number of log-spaced / randomized points in the standard grid
GRID_LOG_POINTS = 60
GRID_RANDOM_POINTS = 10
GRID_LOG_RANGE = (1e-3, 1e3)
GRID_RANDOM_RANGE = (1e-2, 1e2)


def standard_grid(
    seed: int = 0,
    n_log: int = GRID_LOG_POINTS,
    n_random: int = GRID_RANDOM_POINTS,
) -> np.ndarray:
    """Frequencies (rad/s) at which transfer matrices are compared.

    By default 60 log-spaced points spanning [1e-3, 1e3] plus 10 uniform
    random points in [1e-2, 1e2] drawn from a seeded generator, so that
    every equivalence check in the toolkit samples the same reproducible
    set.
    """
    lo, hi = GRID_LOG_RANGE
    grid = np.logspace(np.log10(lo), np.log10(hi), n_log)
    rng = np.random.default_rng(seed)
    rlo, rhi = GRID_RANDOM_RANGE
    extra = rng.uniform(rlo, rhi, size=n_random)
    return np.sort(np.concatenate([grid, extra]))
