"""Occupancy-grid world, sector footprints, line of sight and visibility domains.

Grid conventions: ``occupied[iy, ix]`` with cell ``(ix, iy)`` spanning
``[ix*res, (ix+1)*res) x [iy*res, (iy+1)*res)`` in world meters.  Anything
outside the array counts as occupied, so every world is closed.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Iterable, List, Sequence, Set, Tuple

import numpy as np

from .complex import SimplicialComplex

TWO_PI = 2.0 * math.pi
LEFT, RIGHT = "left", "right"


@dataclass
class OccupancyGrid:
    occupied: np.ndarray
    resolution: float = 1.0

    def __post_init__(self):
        self.occupied = np.asarray(self.occupied, dtype=bool)
        if self.occupied.ndim != 2:
            raise ValueError("occupancy grid must be 2-D")
        if self.occupied.all():
            raise ValueError("no free space in map")

    @property
    def height(self) -> int:
        return self.occupied.shape[0]

    @property
    def width(self) -> int:
        return self.occupied.shape[1]

    @property
    def free(self) -> np.ndarray:
        return ~self.occupied

    def cell_of(self, x: float, y: float) -> Tuple[int, int]:
        return int(math.floor(x / self.resolution)), int(math.floor(y / self.resolution))

    def in_bounds(self, ix: int, iy: int) -> bool:
        return 0 <= ix < self.width and 0 <= iy < self.height

    def is_free_cell(self, ix: int, iy: int) -> bool:
        return self.in_bounds(ix, iy) and not self.occupied[iy, ix]

    def is_free_point(self, x: float, y: float) -> bool:
        return self.is_free_cell(*self.cell_of(x, y))

    def cell_center(self, ix, iy):
        return (np.asarray(ix) + 0.5) * self.resolution, (np.asarray(iy) + 0.5) * self.resolution

    def center_coords(self) -> Tuple[np.ndarray, np.ndarray]:
        """World coordinates of every cell center, each shaped (height, width)."""
        iy, ix = np.mgrid[0 : self.height, 0 : self.width]
        return self.cell_center(ix, iy)

    def clear_cells(self, clearance: int = 0) -> np.ndarray:
        """Free cells with no occupied (or off-map) cell within ``clearance`` cells."""
        ok = self.free.copy()
        if clearance <= 0:
            return ok
        c = int(clearance)
        pad = np.pad(self.occupied, c, constant_values=True)
        h, w = self.occupied.shape
        for dy in range(-c, c + 1):
            for dx in range(-c, c + 1):
                if dx * dx + dy * dy <= c * c:
                    ok &= ~pad[c + dy : c + dy + h, c + dx : c + dx + w]
        return ok


@dataclass
class ConfigGrid:
    """Discrete robot configurations (theta_k, iy, ix).

    ``clearance`` is the robot radius in cells: a configuration is valid
    when its cell is free and no obstacle lies within that radius.  Zero
    means every free cell is a valid configuration.
    """

    base: OccupancyGrid
    n_theta: int = 16
    clearance: int = 0

    def __post_init__(self):
        if self.n_theta < 1:
            raise ValueError("n_theta must be positive")
        if self.clearance < 0:
            raise ValueError("clearance must be non-negative")
        if not self.base.clear_cells(self.clearance).any():
            raise ValueError("no valid configuration at this clearance")

    @property
    def thetas(self) -> np.ndarray:
        return TWO_PI * np.arange(self.n_theta) / self.n_theta

    @property
    def shape(self) -> Tuple[int, int, int]:
        return (self.n_theta, self.base.height, self.base.width)

    @property
    def valid_cells(self) -> np.ndarray:
        return self.base.clear_cells(self.clearance)

    def valid(self) -> np.ndarray:
        return np.broadcast_to(self.valid_cells, self.shape).copy()


@dataclass(frozen=True)
class SensorFootprint:
    radius: float
    half_angle: float = math.pi

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("footprint radius must be positive")
        if not 0 < self.half_angle <= math.pi:
            raise ValueError("half_angle must lie in (0, pi]")

    @property
    def kind(self) -> str:
        return "disk" if self.half_angle >= math.pi else "sector"

    def contains(self, pose_x, pose_y, theta, qx, qy):
        """Vectorized point-in-footprint test for a robot at (pose_x, pose_y, theta)."""
        dx = np.asarray(qx, dtype=float) - pose_x
        dy = np.asarray(qy, dtype=float) - pose_y
        d2 = dx * dx + dy * dy
        inside = d2 <= self.radius * self.radius
        if self.half_angle < math.pi:
            off = wrap_angle(np.arctan2(dy, dx) - theta)
            # a landmark at the sensor's own position has no bearing; count it as seen
            inside &= (np.abs(off) <= self.half_angle) | (d2 == 0)
        return inside

    def contains_sector_of(self, other: "SensorFootprint") -> bool:
        return self.radius >= other.radius and self.half_angle >= other.half_angle


@dataclass
class FootprintFiltration:
    steps: List[SensorFootprint]

    def __post_init__(self):
        if not self.steps:
            raise ValueError("filtration needs at least one footprint")
        for a, b in zip(self.steps, self.steps[1:]):
            if not a.contains_sector_of(b) or a == b:
                raise ValueError(f"filtration not strictly nested: {a} then {b}")

    @property
    def final(self) -> SensorFootprint:
        return self.steps[-1]

    @classmethod
    def geometric(cls, final: SensorFootprint, start_radius: float,
                  radius_ratio: float = 0.6, angle_ratio: float = 0.75,
                  start_half_angle: float | None = None) -> "FootprintFiltration":
        """Shrink from a large footprint to ``final``.

        Step t uses ``max(final.radius, start_radius * radius_ratio**t)`` and
        ``max(final.half_angle, start_half_angle * angle_ratio**t)``.  A disk
        target gives a disk filtration; a sector target starts from a half
        disk unless ``start_half_angle`` is given.
        """
        if start_half_angle is None:
            start_half_angle = math.pi if final.kind == "disk" else math.pi / 2
        start_half_angle = max(start_half_angle, final.half_angle)
        start_radius = max(start_radius, final.radius)
        steps = []
        t = 0
        while True:
            r = max(final.radius, start_radius * radius_ratio ** t)
            a = max(final.half_angle, start_half_angle * angle_ratio ** t)
            fp = SensorFootprint(r, a)
            if not steps or steps[-1] != fp:
                steps.append(fp)
            if r == final.radius and a == final.half_angle:
                break
            t += 1
        return cls(steps)


@dataclass
class LandmarkSite:
    id: int
    x: float
    y: float
    obstacle_adjacent: bool = False


def wrap_angle(a):
    """Wrap to [-pi, pi)."""
    return (np.asarray(a) + math.pi) % TWO_PI - math.pi


# --- line of sight ---------------------------------------------------------

def _canonical(ax, ay, bx, by):
    swap = (bx < ax) | ((bx == ax) & (by < ay))
    return (np.where(swap, bx, ax), np.where(swap, by, ay),
            np.where(swap, ax, bx), np.where(swap, ay, by))


def line_cells(a: Tuple[int, int], b: Tuple[int, int]) -> List[Tuple[int, int]]:
    """Digital segment between two cells, endpoints included.

    Endpoints are put in lexicographic order first, so the cell set is the
    same in both directions.  Minor-axis coordinates round half up.
    """
    ax, ay, bx, by = (int(v) for v in _canonical(a[0], a[1], b[0], b[1]))
    dx, dy = bx - ax, by - ay
    n = max(abs(dx), abs(dy))
    if n == 0:
        return [(ax, ay)]
    return [(ax + (2 * k * dx + n) // (2 * n), ay + (2 * k * dy + n) // (2 * n)) for k in range(n + 1)]


def segment_clear(grid: OccupancyGrid, a: Tuple[int, int], b: Tuple[int, int]) -> bool:
    return all(grid.is_free_cell(ix, iy) for ix, iy in line_cells(a, b))


def line_of_sight_map(grid: OccupancyGrid, target: Tuple[int, int]) -> np.ndarray:
    """Boolean (height, width): True where the segment cell -> target is clear.

    Same digital segment as :func:`line_cells`, evaluated for all cells at once.
    """
    occ = grid.occupied
    h, w = occ.shape
    iy, ix = np.mgrid[0:h, 0:w]
    tx = np.full_like(ix, int(target[0]))
    ty = np.full_like(iy, int(target[1]))
    ax, ay, bx, by = _canonical(ix, iy, tx, ty)
    dx, dy = bx - ax, by - ay
    n = np.maximum(np.abs(dx), np.abs(dy))
    nn = np.maximum(n, 1)
    blocked = np.zeros((h, w), dtype=bool)
    for k in range(int(n.max()) + 1):
        live = k <= n
        px = ax + (2 * k * dx + nn) // (2 * nn)
        py = ay + (2 * k * dy + nn) // (2 * nn)
        inb = (px >= 0) & (px < w) & (py >= 0) & (py < h)
        hit = np.ones((h, w), dtype=bool)
        hit[inb] = occ[py[inb], px[inb]]
        blocked |= live & hit
    return ~blocked


# --- detection ----------------------------------------------------------------

def side_of(pose_x, pose_y, theta, qx, qy):
    """'right' where the heading x (q - pose) cross product is <= 0."""
    cross = np.cos(theta) * (np.asarray(qy) - pose_y) - np.sin(theta) * (np.asarray(qx) - pose_x)
    return np.where(cross <= 0, RIGHT, LEFT)


def detect_landmarks(pose, sites: Sequence[LandmarkSite], footprint: SensorFootprint,
                     grid: OccupancyGrid) -> Set[Tuple[int, str]]:
    """Landmarks inside the footprint at ``pose`` with a clear line of sight."""
    if not sites:
        return set()
    sx = np.array([s.x for s in sites])
    sy = np.array([s.y for s in sites])
    inside = footprint.contains(pose.x, pose.y, pose.theta, sx, sy)
    here = grid.cell_of(pose.x, pose.y)
    sides = side_of(pose.x, pose.y, pose.theta, sx, sy)
    out = set()
    for i in np.flatnonzero(inside):
        s = sites[i]
        if segment_clear(grid, here, grid.cell_of(s.x, s.y)):
            out.add((s.id, str(sides[i])))
    return out


class World:
    """Map, landmark sites and the true footprint, with cached line of sight.

    Read-only after construction, so robots may query it concurrently.
    """

    def __init__(self, grid: OccupancyGrid, sites: Sequence[LandmarkSite],
                 footprint: SensorFootprint, clearance: int = 0):
        self.grid = grid
        self.clearance = clearance
        self.valid = grid.clear_cells(clearance)
        self.sites = list(sites)
        self.footprint = footprint
        self.ids = np.array([s.id for s in self.sites], dtype=np.int64)
        self.sx = np.array([s.x for s in self.sites], dtype=float)
        self.sy = np.array([s.y for s in self.sites], dtype=float)
        self.index = {s.id: i for i, s in enumerate(self.sites)}
        if self.sites:
            self.los = np.stack([line_of_sight_map(grid, grid.cell_of(s.x, s.y)) for s in self.sites])
        else:
            self.los = np.zeros((0, grid.height, grid.width), dtype=bool)

    def detect(self, x: float, y: float, theta: float) -> List[int]:
        """IDs (ascending) of the landmarks visible from (x, y, theta)."""
        if not self.sites:
            return []
        ix, iy = self.grid.cell_of(x, y)
        mask = self.footprint.contains(x, y, theta, self.sx, self.sy) & self.los[:, iy, ix]
        return sorted(self.ids[mask].tolist())

    def detect_with_sides(self, x: float, y: float, theta: float) -> Set[Tuple[int, str]]:
        ids = self.detect(x, y, theta)
        out = set()
        for lid in ids:
            i = self.index[lid]
            out.add((lid, str(side_of(x, y, theta, self.sx[i], self.sy[i]))))
        return out

    def is_valid(self, x: float, y: float) -> bool:
        ix, iy = self.grid.cell_of(x, y)
        return self.grid.in_bounds(ix, iy) and bool(self.valid[iy, ix])

    def side(self, x: float, y: float, theta: float, landmark: int) -> str:
        i = self.index[landmark]
        return str(side_of(x, y, theta, self.sx[i], self.sy[i]))


def visibility_domain(site: LandmarkSite, footprint: SensorFootprint, grid: ConfigGrid,
                      los: np.ndarray | None = None) -> np.ndarray:
    """Configurations (theta_k, iy, ix) from which ``site`` is detected."""
    base = grid.base
    if los is None:
        los = line_of_sight_map(base, base.cell_of(site.x, site.y))
    cx, cy = base.center_coords()
    dx = site.x - cx
    dy = site.y - cy
    near = (dx * dx + dy * dy <= footprint.radius * footprint.radius) & los & grid.valid_cells
    out = np.zeros(grid.shape, dtype=bool)
    if footprint.half_angle >= math.pi:
        out[:] = near
        return out
    bearing = np.arctan2(dy, dx)
    here = (dx * dx + dy * dy) == 0
    for k, th in enumerate(grid.thetas):
        out[k] = near & ((np.abs(wrap_angle(bearing - th)) <= footprint.half_angle) | here)
    return out


def coverage(sites: Iterable[LandmarkSite], footprint: SensorFootprint, grid: ConfigGrid) -> np.ndarray:
    covered = np.zeros(grid.shape, dtype=bool)
    for s in sites:
        covered |= visibility_domain(s, footprint, grid)
    return covered


def cech_reference(sites: Sequence[LandmarkSite], footprint: SensorFootprint,
                   grid: ConfigGrid) -> SimplicialComplex:
    """Complex of detection sets over every valid discrete configuration."""
    sites = list(sites)
    out = SimplicialComplex({s.id: s.obstacle_adjacent for s in sites})
    if not sites:
        return out
    world = World(grid.base, sites, footprint, grid.clearance)
    masks = np.stack([visibility_domain(s, footprint, grid, los=world.los[i])
                      for i, s in enumerate(sites)])
    flat = masks.reshape(len(sites), -1).T
    flat = flat[flat.any(axis=1)]
    if len(flat) == 0:
        return out
    patterns, counts = np.unique(flat, axis=0, return_counts=True)
    for row, n in zip(patterns, counts):
        ids = world.ids[row].tolist()
        out.insert(ids)
        for v in ids:
            out.obs_count[v] += int(n) - 1
    return out


# --- maps, motion, I/O ------------------------------------------------------

def load_map(path, resolution: float = 1.0, threshold: int = 128) -> OccupancyGrid:
    """Read an 8-bit grayscale PGM/PNG; pixels darker than ``threshold`` are occupied.

    Image row 0 is the top of the map (largest y).
    """
    from PIL import Image

    try:
        img = Image.open(path)
        img.load()
    except (OSError, ValueError) as exc:
        raise ValueError(f"cannot read map {path}: {exc}") from exc
    arr = np.asarray(img.convert("L"))
    return OccupancyGrid(np.flipud(arr < threshold).copy(), resolution)


def save_map(grid: OccupancyGrid, path) -> None:
    from PIL import Image

    img = np.where(np.flipud(grid.occupied), 0, 255).astype(np.uint8)
    Image.fromarray(img, mode="L").save(path)


def step_pose(grid: OccupancyGrid, pose, point, valid: np.ndarray | None = None):
    """Move to ``point`` unless its cell is occupied (or not in ``valid``).

    Returns ``("moved", point)`` or ``("collided", pose)``.
    """
    if not grid.in_bounds(*grid.cell_of(pose.x, pose.y)):
        raise ValueError(f"pose ({pose.x}, {pose.y}) is outside the map")
    ix, iy = grid.cell_of(point.x, point.y)
    ok = grid.is_free_cell(ix, iy) and (valid is None or bool(valid[iy, ix]))
    return ("moved", point) if ok else ("collided", pose)


def interior_obstacles(grid: OccupancyGrid) -> np.ndarray:
    """Occupied cells whose 4-connected component does not touch the map border."""
    from .graphops import label_components

    labels, n = label_components(grid.occupied)
    border = set(np.unique(np.concatenate([labels[0], labels[-1], labels[:, 0], labels[:, -1]])).tolist())
    keep = [k for k in range(1, n + 1) if k not in border]
    return np.isin(labels, keep)


def mark_obstacle_adjacent(grid: OccupancyGrid, sites: Sequence[LandmarkSite],
                           radius: float) -> List[LandmarkSite]:
    """Flag sites within ``radius`` of an interior obstacle cell."""
    obs = interior_obstacles(grid)
    oy, ox = np.nonzero(obs)
    cx, cy = grid.cell_center(ox, oy)
    out = []
    for s in sites:
        adj = bool(len(cx)) and bool(np.min((cx - s.x) ** 2 + (cy - s.y) ** 2) <= radius * radius)
        out.append(LandmarkSite(s.id, s.x, s.y, adj))
    return out


def sites_to_json(sites: Sequence[LandmarkSite]) -> str:
    return json.dumps([asdict(s) for s in sites], indent=1)


def sites_from_json(text: str) -> List[LandmarkSite]:
    return [LandmarkSite(int(d["id"]), float(d["x"]), float(d["y"]), bool(d["obstacle_adjacent"]))
            for d in json.loads(text)]
