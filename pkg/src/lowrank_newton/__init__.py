"""Rank-r Newton iteration for singular equations with perturbed data."""
from .linalg_core import (numerical_rank, pinv_apply, rank_r_project, subspace_distance, svd,
                          thin_qr)
from .mapping import Layout, MappingHandle, Matrix, PolySpace, Scalar, Vector, fd_jacobian_check
from .newton import IterationTrace, NewtonOptions, condition_estimate, rank_r_newton
from .linear_solve import AffineSolution, general_solve, operator_solve
from .poly import (PolynomialMapping, SparsePoly, format_poly, parse_poly, parse_system,
                   poly_arith, poly_eval, poly_system_jacobian)
from .gcd import GcdTriple, gcd_initialize, gcd_refine, numerical_gcd
from .factor import FactorArray, FactorStructure, factor_refine, gauge_normalize
from .eig import EigResult, MultiplicitySupport, defective_eig, defective_eig_refine
from .deflate import DeflationStage, deflate_step, depth_deflation_solve

__version__ = "0.1.0"
