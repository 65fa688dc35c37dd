"""Landmark complexes: placement, multi-robot construction and hole finding."""
from .complex import SimplicialComplex, boundary_matrices, one_skeleton
from .environment import (
    ConfigGrid,
    FootprintFiltration,
    LandmarkSite,
    OccupancyGrid,
    SensorFootprint,
    World,
    cech_reference,
    load_map,
)
from .exploration import RobotState, Team, WalkParams, run_lcca, run_random_walk
from .homology import betti1_by_flow, find_holes
from .placement import run_lpa

__all__ = [
    "ConfigGrid",
    "FootprintFiltration",
    "LandmarkSite",
    "OccupancyGrid",
    "RobotState",
    "SensorFootprint",
    "SimplicialComplex",
    "Team",
    "WalkParams",
    "World",
    "betti1_by_flow",
    "boundary_matrices",
    "cech_reference",
    "find_holes",
    "load_map",
    "one_skeleton",
    "run_lcca",
    "run_lpa",
    "run_random_walk",
]
