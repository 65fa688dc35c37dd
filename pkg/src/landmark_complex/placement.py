"""Landmark placement by filtration over sensor footprints.

For each footprint of a shrinking sequence, uncovered configurations are
split into connected components (per heading slice) and a landmark is put
where its visibility domain should swallow the first component.  The loop
ends with every free configuration seeing at least one landmark under the
true footprint.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np

from .environment import (
    ConfigGrid,
    FootprintFiltration,
    LandmarkSite,
    OccupancyGrid,
    SensorFootprint,
    line_of_sight_map,
    mark_obstacle_adjacent,
    visibility_domain,
)
from .graphops import label_components

log = logging.getLogger(__name__)


class PlacementError(RuntimeError):
    pass


@dataclass
class StepRecord:
    t: int
    radius: float
    half_angle: float
    placed_count: int
    uncovered_cells: int


@dataclass
class PlacementResult:
    sites: List[LandmarkSite]
    steps: List[StepRecord] = field(default_factory=list)
    fallbacks: int = 0


def _snap(grid: OccupancyGrid, x: float, y: float, cells: np.ndarray,
          origin: tuple | None = None) -> tuple:
    """Free cell for a target point.

    Tries the cell containing (x, y), then backs off along the segment to
    ``origin``; failing that, the nearest free cell in the bounding box of
    ``cells``.
    """
    ix, iy = grid.cell_of(x, y)
    if grid.is_free_cell(ix, iy):
        return ix, iy
    if origin is not None:
        ox, oy = origin
        n = int(math.ceil(math.hypot(x - ox, y - oy) / (0.25 * grid.resolution)))
        for k in range(1, n + 1):
            f = 1.0 - k / n
            jx, jy = grid.cell_of(ox + f * (x - ox), oy + f * (y - oy))
            if grid.is_free_cell(jx, jy):
                return jx, jy
    y0, x0 = cells.min(axis=0)
    y1, x1 = cells.max(axis=0)
    sub = grid.free[y0 : y1 + 1, x0 : x1 + 1]
    fy, fx = np.nonzero(sub)
    if len(fy) == 0:
        raise PlacementError("no free cell near component")
    cx, cy = grid.cell_center(fx + x0, fy + y0)
    k = int(np.argmin((cx - x) ** 2 + (cy - y) ** 2))
    return int(fx[k] + x0), int(fy[k] + y0)


def place_landmark(grid: OccupancyGrid, cells: np.ndarray, theta: float | None,
                   delta_s: float, site_id: int = 0) -> LandmarkSite:
    """Site for one uncovered component given as (k, 2) ``(iy, ix)`` cells.

    With ``theta`` None (disk footprints) the site is the component centroid.
    Otherwise the centroid is pushed ``delta_s`` along the heading ``theta``,
    which is where robots of that slice look, so the domain (which trails
    the site) lands back on the component.  The site is snapped to the
    center of a free cell; an occupied target backs off toward the centroid.
    """
    if len(cells) == 0:
        raise ValueError("empty component")
    cx, cy = grid.cell_center(cells[:, 1], cells[:, 0])
    x0, y0 = float(cx.mean()), float(cy.mean())
    x, y = x0, y0
    if theta is not None:
        x += delta_s * math.cos(theta)
        y += delta_s * math.sin(theta)
    ix, iy = _snap(grid, x, y, cells, origin=(x0, y0))
    px, py = grid.cell_center(ix, iy)
    return LandmarkSite(site_id, float(px), float(py))


def run_lpa(grid: ConfigGrid, filtration: FootprintFiltration, delta_s: float,
            adjacency_radius: float | None = None) -> PlacementResult:
    """Place landmarks until the true footprint covers every free configuration."""
    if delta_s < 0:
        raise ValueError("delta_s must be non-negative")
    base = grid.base
    valid = grid.valid()
    sites: List[LandmarkSite] = []
    los: Dict[int, np.ndarray] = {}
    result = PlacementResult(sites)
    se2 = filtration.final.kind == "sector"
    thetas = grid.thetas

    def domain(site: LandmarkSite, fp: SensorFootprint) -> np.ndarray:
        if site.id not in los:
            los[site.id] = line_of_sight_map(base, base.cell_of(site.x, site.y))
        return visibility_domain(site, fp, grid, los=los[site.id])

    for t, fp in enumerate(filtration.steps, start=1):
        covered = np.zeros(grid.shape, dtype=bool)
        for s in sites:
            covered |= domain(s, fp)
        uncovered = valid & ~covered
        placed = 0
        slices = range(grid.n_theta) if se2 else [0]
        for k in slices:
            while True:
                sl = uncovered[k] if se2 else uncovered.any(axis=0)
                if not sl.any():
                    break
                labels, _ = label_components(sl)
                comp = np.argwhere(labels == 1)
                site = place_landmark(base, comp, thetas[k] if se2 else None, delta_s, len(sites))
                dom = domain(site, fp)
                gain_here = dom[k][comp[:, 0], comp[:, 1]] if se2 else dom.any(axis=0)[comp[:, 0], comp[:, 1]]
                if not gain_here.any():
                    # centroid rule missed the component entirely; fall back to one of its cells
                    iy, ix = comp[0]
                    px, py = base.cell_center(ix, iy)
                    los.pop(site.id, None)
                    site = LandmarkSite(len(sites), float(px), float(py))
                    dom = domain(site, fp)
                    result.fallbacks += 1
                before = int(uncovered.sum())
                sites.append(site)
                covered |= dom
                uncovered = valid & ~covered
                if int(uncovered.sum()) >= before:
                    raise PlacementError("placement failed to reduce the uncovered set")
                placed += 1
        result.steps.append(StepRecord(t, fp.radius, fp.half_angle, placed, int(uncovered.sum())))
        log.info("LPA step %d: r=%.3f phi=%.3f placed=%d total=%d", t, fp.radius, fp.half_angle,
                 placed, len(sites))
    if adjacency_radius is not None:
        result.sites = mark_obstacle_adjacent(base, sites, adjacency_radius)
    return result


def uncovered_configurations(grid: ConfigGrid, sites: Sequence[LandmarkSite],
                             footprint: SensorFootprint) -> np.ndarray:
    """Brute-force check: valid configurations where no site is detected."""
    from .environment import World

    world = World(grid.base, sites, footprint, grid.clearance)
    out = np.zeros(grid.shape, dtype=bool)
    cx, cy = grid.base.center_coords()
    free = grid.valid_cells
    for k, th in enumerate(grid.thetas):
        for iy, ix in np.argwhere(free):
            if not world.detect(float(cx[iy, ix]), float(cy[iy, ix]), float(th)):
                out[k, iy, ix] = True
    return out


def write_steps_csv(path, result: PlacementResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "radius", "half_angle", "placed_count", "uncovered_cells"])
        for r in result.steps:
            w.writerow([r.t, r.radius, r.half_angle, r.placed_count, r.uncovered_cells])
