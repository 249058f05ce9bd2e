"""Complete monodromy data of rank-one linear ODE systems.

Given dY/dz = (A0 + A1/z) Y with A0 diagonalizable with distinct eigenvalues,
the package computes the connection coefficients of the associated Fuchsian
system in the spectral plane, assembles from them the monodromy matrices and
the Stokes matrices/factors of the original system, and cross-validates the
closed-form Stokes data against an independent direct-integration computation
of the sector fundamental solutions.
"""

from .core import (BranchPoint, CriticalData, DirectionFrame, RankOneSystem,
                   branch_point, critical_directions, default_eta, frame,
                   validate_system)
from .local import (CaseTag, LocalBasis, build_all_bases, build_local_basis,
                    classify, eval_fundamental, eval_psi_k, eval_psi_sing)
from .continuation import (ConnectionMatrix, ContinuationPath,
                           connection_coefficient, connection_matrix,
                           continue_vector, plan_path)
from .monodromy import (MonodromyData, alpha, beta, eta_shift,
                        monodromy_at_infinity, monodromy_data,
                        monodromy_matrices, mstar_matrices, stokes_factor,
                        stokes_factor_product, stokes_minus_inv, stokes_plus,
                        trace_invariants)
from .oracle import (FormalSeries, SectorSolution, formal_series,
                     laplace_column, sector_solution, stokes_direct,
                     stokes_pair)
from . import errors

__all__ = [
    "RankOneSystem", "DirectionFrame", "CriticalData", "BranchPoint",
    "validate_system", "critical_directions", "frame", "default_eta",
    "branch_point",
    "CaseTag", "LocalBasis", "classify", "build_local_basis", "build_all_bases",
    "eval_fundamental", "eval_psi_k", "eval_psi_sing",
    "ContinuationPath", "ConnectionMatrix", "plan_path", "continue_vector",
    "connection_coefficient", "connection_matrix",
    "MonodromyData", "alpha", "beta", "monodromy_matrices", "mstar_matrices",
    "stokes_plus", "stokes_minus_inv", "stokes_factor", "stokes_factor_product",
    "trace_invariants", "eta_shift", "monodromy_at_infinity", "monodromy_data",
    "FormalSeries", "SectorSolution", "formal_series", "sector_solution",
    "stokes_direct", "stokes_pair", "laplace_column",
    "errors",
]
