"""Planar deformed system on a disk grid."""
from .config import Background, VortexConfig
from .grid import DiskGrid
from .solver import (
    GridEstimate,
    PathStep,
    PlanarNewtonFailure,
    PlanarSolution,
    assemble_residual,
    coarse_companion,
    continue_in_eps,
    grid_estimate,
    newton_order,
    newton_solve,
    newton_step,
    planar_from_radial,
)

__all__ = [
    "Background",
    "DiskGrid",
    "GridEstimate",
    "PathStep",
    "PlanarNewtonFailure",
    "PlanarSolution",
    "VortexConfig",
    "assemble_residual",
    "coarse_companion",
    "continue_in_eps",
    "grid_estimate",
    "newton_order",
    "newton_solve",
    "newton_step",
    "planar_from_radial",
]
