"""Bundled desk-scale maps."""
from __future__ import annotations

import numpy as np

from .environment import OccupancyGrid, load_map

RESOLUTION = 0.05  # meters per cell


def ring_room(size: int = 64, wall: int = 2, block: int = 16) -> OccupancyGrid:
    """Closed square room with one square obstacle in the middle."""
    occ = np.zeros((size, size), dtype=bool)
    occ[:wall, :] = occ[-wall:, :] = True
    occ[:, :wall] = occ[:, -wall:] = True
    lo = (size - block) // 2
    occ[lo : lo + block, lo : lo + block] = True
    return OccupancyGrid(occ, RESOLUTION)


def two_room(size: int = 96, wall: int = 2, door: int = 16) -> OccupancyGrid:
    """Two rooms split by a wall with one doorway, plus a pillar in the right room."""
    occ = np.zeros((size, size), dtype=bool)
    occ[:wall, :] = occ[-wall:, :] = True
    occ[:, :wall] = occ[:, -wall:] = True
    mid = size // 2
    occ[:, mid - 1 : mid + 1] = True
    d0 = size // 2 - door // 2
    occ[d0 : d0 + door, mid - 1 : mid + 1] = False
    p = size // 8
    cx, cy = 3 * size // 4, size // 2
    occ[cy - p // 2 : cy + p // 2, cx - p // 2 : cx + p // 2] = True
    return OccupancyGrid(occ, RESOLUTION)


BUNDLED = {"ring_room": ring_room, "two_room": two_room}


def resolve_map(spec: str, resolution: float = RESOLUTION) -> OccupancyGrid:
    """Bundled map name or a path to a PGM/PNG file."""
    if spec in BUNDLED:
        return BUNDLED[spec]()
    return load_map(spec, resolution)
