"""Spectral computations for the supersymmetric membrane Hamiltonian

    H = p_x^2 + p_y^2 + x^2 y^2 + x s3 + y s1

on finite grids, with numerical checks of its operator identities and of
the lower bounds that rule out zero modes.
"""

from .eigensolver import SolverConfig, SpectralResult, dense_oracle, smallest_eigenpairs
from .grid import BC, GridSpec, RegionSpec, build_grid, restrict_region
from .maps import LinearMap, SpinorField
from .verify import BoundFit, VerificationReport

__all__ = [
    "BC",
    "BoundFit",
    "GridSpec",
    "LinearMap",
    "RegionSpec",
    "SolverConfig",
    "SpectralResult",
    "SpinorField",
    "VerificationReport",
    "build_grid",
    "dense_oracle",
    "restrict_region",
    "smallest_eigenpairs",
]
