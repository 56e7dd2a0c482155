"""Single configuration layer: every tolerance and schedule lives here.

All solvers and inversion routines accept an optional ``SolverConfig``;
``DEFAULT`` is used when none is given.  CLI flags override fields and the
resolved config is echoed into every output sidecar.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np


@dataclass(frozen=True)
class SolverConfig:
    # fixed-point iteration
    fp_tol: float = 1e-13            # |w_{k+1}-w_k| < fp_tol*(1+|w_k|)
    fp_maxiter: int = 500
    newton_after: int = 200          # switch to Newton fallback after this many sweeps
    residual_tol: float = 1e-12      # certified residual for inversions

    # Stieltjes / Poisson inversion
    eta0: float = 0.1                # eta_k = eta0 * 2**-k, k = 0..eta_levels-1
    eta_levels: int = 7
    atom_threshold: float = 0.05     # eta*|G| above this flags an atom candidate
    atom_stability: float = 0.02     # relative stabilisation across the last two levels
    atom_report_min: float = 1e-4    # smallest atom mass worth reporting
    density_tol: float = 1e-3        # advertised sup-accuracy of recovered densities
    unstable_factor: float = 10.0    # divergence trigger for ExtrapolationUnstable
    mass_tol: float = 1e-9           # mass-sum checks on measures

    # continuation ladders
    ladder_top: float = 1.0          # start height Im z (or 1-r budget on the disk)
    ladder_ratio: float = 0.5

    # misc
    psi_limit_x: float = 1e6         # |x| used to estimate lim_{x->-inf} psi(x)
    threads: int = 1

    def eta_schedule(self) -> np.ndarray:
        return self.eta0 * 2.0 ** -np.arange(self.eta_levels)

    def r_schedule(self) -> np.ndarray:
        return 1.0 - self.eta0 * 2.0 ** -np.arange(self.eta_levels)

    def as_dict(self) -> dict:
        return asdict(self)


DEFAULT = SolverConfig()


@dataclass
class GammaParams:
    """Pinned evaluation parameters for the degree functional, per domain.

    Fixed defaults so degree values are comparable across runs: (alpha, beta)
    for the real line, (alpha, beta, delta) for the positive half-line,
    alpha for the circle.
    """

    real: tuple = (1.0, 1.0)
    rplus: tuple = (np.pi / 2, 0.5, 2.0)
    circle: float = 0.5


DEFAULT_GAMMA = GammaParams()
