"""smalleig: local-solvability analysis of the planar model operators

    L = d^2/dx^2 + x^(2(m-1)) d^2/dt^2 + i (m-1) x^(m-2) a(x) d/dt

via the spectral threshold set, the small-eigenvalue perturbation series,
and a grid reenactment of the solvability-inequality failure.
"""

__version__ = "0.1.0"

from .hermite import BasisSpec
from .linalg import EigenPair, OpMatrix
from .multipoly import MultiPoly
from .perturbation import (Decision, MomentTable, PerturbSeries, Tolerances,
                           decide, forced_taylor, kernel_and_moments,
                           lambda_polynomials, lambda_series,
                           moment_recurrence_residual)
from .spectrum import (ModelParams, SigmaSet, SmallEigenConfig, assemble,
                       eigenpairs_converged, sigma_set, small_eigenvalue,
                       sweep_fit)

__all__ = [
    "__version__", "BasisSpec", "EigenPair", "OpMatrix", "MultiPoly",
    "Decision", "MomentTable", "PerturbSeries", "Tolerances", "ModelParams",
    "SigmaSet", "SmallEigenConfig", "assemble", "decide", "eigenpairs_converged",
    "forced_taylor", "kernel_and_moments", "lambda_polynomials", "lambda_series",
    "moment_recurrence_residual", "sigma_set", "small_eigenvalue", "sweep_fit",
]
