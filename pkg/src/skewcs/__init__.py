"""Solver and checks for the coupled vortex equations

    Laplacian(u_1) + e^{u_2}(1 - e^{u_1}) = 4 pi sum_j delta_{p_1j}
    Laplacian(u_2) + e^{u_1}(1 - e^{u_2}) = 4 pi sum_j delta_{p_2j}

with u_i ~ -2 beta_i ln|x| at infinity (non-topological decay).

Radial solutions come from shooting on the origin constants, planar ones
from Newton iteration with continuation in the vortex-splitting parameter;
both are checked against closed-form flux and Pohozaev integrals.
"""
from .radial import (
    MaxRadiusReached,
    MixedUndetermined,
    NonTopological,
    NumericalFailure,
    RadialParams,
    RadialSolution,
    ShootingParams,
    Topological,
    solve_radial,
)
from .shooting import DecayPair, ShootingFailure, scan_region, shoot, solve_for_target

__all__ = [
    "DecayPair",
    "MaxRadiusReached",
    "MixedUndetermined",
    "NonTopological",
    "NumericalFailure",
    "RadialParams",
    "RadialSolution",
    "ShootingFailure",
    "ShootingParams",
    "Topological",
    "scan_region",
    "shoot",
    "solve_for_target",
    "solve_radial",
]
