"""Zolotarev numbers, optimal rational functions and skeleton decompositions of the Cauchy kernel."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .analytic import zolotarev_bounds, zolotarev_nodes, zolotarev_number_log
from .domains import Domain, MobiusMap, SeparatedPair, cross_ratio_lambda
from .solver import SolveOptions, SolverError, solve
from .skeleton import SkeletonDecomposition, kappa, max_relative_error
from .special import EllipticModulus, complete_K, jacobi_dn

__all__ = [
    "Domain", "EllipticModulus", "MobiusMap", "SeparatedPair", "SkeletonDecomposition",
    "SolveOptions", "SolverError", "complete_K", "cross_ratio_lambda", "jacobi_dn", "kappa",
    "max_relative_error", "solve", "zolotarev_bounds", "zolotarev_nodes",
    "zolotarev_number_log",
]
