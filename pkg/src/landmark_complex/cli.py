"""Command-line experiments: placement, reference complex, LCCA runs and sweeps.

Every command reads a scenario (defaults, then an optional JSON config,
then flags) and writes its outputs under ``--out-dir``.  Exit codes: 0 on
success, 2 on invalid configuration, 3 when a run fails to converge
(placement error or target not reached within the observation cap).
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import complex as cx
from .environment import (
    ConfigGrid,
    FootprintFiltration,
    LandmarkSite,
    OccupancyGrid,
    SensorFootprint,
    World,
    cech_reference,
    sites_from_json,
    sites_to_json,
)
from .exploration import RobotState, RunSummary, Team, WalkParams, random_starts, run_lcca, write_metrics, write_trace
from .homology import write_diagnostics
from .maps import BUNDLED, resolve_map
from .placement import PlacementError, run_lpa, write_steps_csv

log = logging.getLogger("landmark_complex")

COMMANDS = ("place", "cech", "lcca", "hiw_sweep", "switch_sweep")


class ConfigError(ValueError):
    pass


@dataclass
class Scenario:
    map: str = "ring_room"
    resolution: float = 0.05
    mode: str = "se2"
    n_theta: int = 8
    radius: float = 1.0
    half_angle: Optional[float] = None  # default 5*pi/12 in se2, pi in r2
    clearance: int = 3
    radius_ratio: float = 0.6
    angle_ratio: float = 0.75
    delta_s: Optional[float] = None  # default radius / 4
    adjacency_radius: Optional[float] = None  # default radius
    landmarks: Optional[str] = None  # JSON from `place`; placement is rerun when absent
    robots: int = 4
    starts: object = "random"
    seed: int = 0
    schedule: str = "deterministic"
    target: float = 0.98
    eps1: float = 0.004
    eps2: float = 0.0005
    max_observations: int = 150_000
    walk: dict = field(default_factory=dict)
    snapshot_every: int = 2000
    diagnostics: bool = False
    seeds: int = 5
    fractions: List[float] = field(default_factory=lambda: [0.0, 0.01, 0.03, 0.05, 0.07])
    r_values: List[float] = field(default_factory=lambda: [0.0005, 0.001, 0.002, 0.004, 0.008, 0.016])

    def validate(self) -> None:
        if self.mode not in ("r2", "se2"):
            raise ConfigError(f"mode must be 'r2' or 'se2', got {self.mode!r}")
        if self.n_theta < 1:
            raise ConfigError("n_theta must be at least 1")
        if not self.radius > 0:
            raise ConfigError("radius must be positive")
        ha = self.footprint().half_angle
        if not 0 < ha <= math.pi:
            raise ConfigError("half_angle must be in (0, pi]")
        if self.mode == "r2" and ha < math.pi:
            raise ConfigError("r2 mode needs a disk footprint (half_angle = pi)")
        if not (0 < self.radius_ratio < 1 and 0 < self.angle_ratio < 1):
            raise ConfigError("filtration ratios must be in (0, 1)")
        if self.clearance < 0:
            raise ConfigError("clearance must be non-negative")
        if self.robots < 1:
            raise ConfigError("need at least one robot")
        if self.schedule not in ("deterministic", "concurrent"):
            raise ConfigError(f"schedule must be 'deterministic' or 'concurrent', got {self.schedule!r}")
        if not 0 < self.target <= 1:
            raise ConfigError("target must be in (0, 1]")
        if not 0 < self.eps2 < self.eps1:
            raise ConfigError(f"need 0 < eps2 < eps1 (got eps1={self.eps1}, eps2={self.eps2})")
        if self.max_observations < 1:
            raise ConfigError("max_observations must be positive")
        if self.seeds < 1:
            raise ConfigError("seeds must be positive")
        if any(not 0 <= f < self.target for f in self.fractions):
            raise ConfigError("hiw fractions must lie in [0, target)")
        if any(not r > 0 for r in self.r_values):
            raise ConfigError("switch r values must be positive")
        if self.starts != "random":
            if not isinstance(self.starts, list) or len(self.starts) != self.robots:
                raise ConfigError("starts must be 'random' or one [x, y, theta] per robot")
            for p in self.starts:
                if not (isinstance(p, (list, tuple)) and len(p) == 3):
                    raise ConfigError(f"bad start pose {p!r}")
        try:
            self.walk_params()
        except (TypeError, ValueError) as e:
            raise ConfigError(f"walk parameters: {e}") from None

    def footprint(self) -> SensorFootprint:
        ha = self.half_angle
        if ha is None:
            ha = math.pi if self.mode == "r2" else 5 * math.pi / 12
        return SensorFootprint(self.radius, ha)

    def walk_params(self, **over) -> WalkParams:
        kw = dict(eps1=self.eps1, eps2=self.eps2, max_observations=self.max_observations)
        kw.update(self.walk)
        kw.update(over)
        return WalkParams.for_footprint(self.radius, self.resolution, **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")
        return cls(**d)


class Setup:
    """Map, configuration grid, landmarks and world for a scenario."""

    def __init__(self, sc: Scenario):
        self.sc = sc
        try:
            self.grid: OccupancyGrid = resolve_map(sc.map, sc.resolution)
        except (OSError, ValueError) as e:
            raise ConfigError(f"cannot load map {sc.map!r}: {e}") from None
        self.fp = sc.footprint()
        self.cgrid = ConfigGrid(self.grid, sc.n_theta if sc.mode == "se2" else 1, sc.clearance)
        if not self.cgrid.valid_cells.any():
            raise ConfigError("no configuration satisfies the clearance")
        self.placement = None
        if sc.landmarks:
            try:
                self.sites = sites_from_json(Path(sc.landmarks).read_text())
            except (OSError, ValueError, KeyError) as e:
                raise ConfigError(f"cannot read landmarks {sc.landmarks!r}: {e}") from None
        else:
            self.placement = self.place()
            self.sites = self.placement.sites
        self.world = World(self.grid, self.sites, self.fp, sc.clearance)
        self._cech = None

    def place(self):
        sc = self.sc
        diag = math.hypot(self.grid.width, self.grid.height) * self.grid.resolution
        filt = FootprintFiltration.geometric(self.fp, diag, sc.radius_ratio, sc.angle_ratio)
        ds = sc.delta_s if sc.delta_s is not None else sc.radius / 4
        adj = sc.adjacency_radius if sc.adjacency_radius is not None else sc.radius
        return run_lpa(self.cgrid, filt, ds, adjacency_radius=adj)

    def cech(self) -> cx.SimplicialComplex:
        if self._cech is None:
            self._cech = cech_reference(self.sites, self.fp, self.cgrid)
        return self._cech

    def starts(self, seed: int) -> List[RobotState]:
        if self.sc.starts == "random":
            return random_starts(self.world, self.sc.robots, seed)
        out = [RobotState(float(x), float(y), float(t), i) for i, (x, y, t) in enumerate(self.sc.starts)]
        for r in out:
            if not self.world.is_valid(r.x, r.y):
                raise ConfigError(f"start pose of robot {r.id} is not free: ({r.x}, {r.y})")
        return out

    def team(self, seed: int, params: WalkParams | None = None, keep_trace=True) -> Team:
        return Team(self.world, self.starts(seed), params or self.sc.walk_params(), seed=seed,
                    schedule=self.sc.schedule, target=self.cech().c2,
                    target_fraction=self.sc.target, keep_trace=keep_trace)


# --- SVG ----------------------------------------------------------------------

def render_svg(grid: OccupancyGrid, sites: Sequence[LandmarkSite], complex: cx.SimplicialComplex,
               robots: Sequence[RobotState] = (), scale: float = 8.0) -> str:
    """Complex immersed at the true landmark positions, over the map."""
    h, w = grid.height, grid.width
    res = grid.resolution

    def px(x, y):
        return x / res * scale, (h - y / res) * scale

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w * scale:g}" height="{h * scale:g}" '
             f'viewBox="0 0 {w * scale:g} {h * scale:g}">',
             f'<rect x="0" y="0" width="{w * scale:g}" height="{h * scale:g}" fill="white"/>']
    # occupied cells, merged into horizontal runs
    for iy in range(h):
        row = grid.occupied[iy]
        ix = 0
        while ix < w:
            if row[ix]:
                j = ix
                while j < w and row[j]:
                    j += 1
                parts.append(f'<rect x="{ix * scale:g}" y="{(h - 1 - iy) * scale:g}" '
                             f'width="{(j - ix) * scale:g}" height="{scale:g}" fill="#444"/>')
                ix = j
            else:
                ix += 1
    pos = {s.id: px(s.x, s.y) for s in sites}
    for a, b, c in sorted(complex.c2):
        if a in pos and b in pos and c in pos:
            pts = " ".join(f"{pos[v][0]:.2f},{pos[v][1]:.2f}" for v in (a, b, c))
            parts.append(f'<polygon points="{pts}" fill="#3b7dd8" fill-opacity="0.12" stroke="none"/>')
    for a, b in sorted(complex.c1):
        if a in pos and b in pos:
            parts.append(f'<line x1="{pos[a][0]:.2f}" y1="{pos[a][1]:.2f}" x2="{pos[b][0]:.2f}" '
                         f'y2="{pos[b][1]:.2f}" stroke="#1f4e99" stroke-width="0.6"/>')
    seen = {v for (v,) in complex.c0}
    for s in sites:
        x, y = pos[s.id]
        fill = "#d62728" if s.id in seen else "#bbbbbb"
        parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{scale * 0.6:g}" fill="{fill}"/>')
    for r in robots:
        x, y = px(r.x, r.y)
        hx, hy = x + scale * 2 * math.cos(r.theta), y - scale * 2 * math.sin(r.theta)
        parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{scale * 0.9:g}" fill="#2ca02c"/>')
        parts.append(f'<line x1="{x:.2f}" y1="{y:.2f}" x2="{hx:.2f}" y2="{hy:.2f}" '
                     f'stroke="#2ca02c" stroke-width="1.5"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# --- commands -------------------------------------------------------------------

def cmd_place(sc: Scenario, out: Path) -> int:
    setup = Setup(sc)
    (out / "landmarks.json").write_text(sites_to_json(setup.sites))
    if setup.placement is not None:
        write_steps_csv(out / "coverage.csv", setup.placement)
    print(f"placed {len(setup.sites)} landmarks")
    return 0


def cmd_cech(sc: Scenario, out: Path) -> int:
    setup = Setup(sc)
    ref = setup.cech()
    cx.save(ref, out / "cech.json")
    print(f"c0={len(ref.c0)} c1={len(ref.c1)} c2={len(ref.c2)}")
    return 0


def cmd_lcca(sc: Scenario, out: Path) -> int:
    setup = Setup(sc)
    team = setup.team(sc.seed)
    snaps = out / "snapshots"
    snaps.mkdir(exist_ok=True)

    def snapshot(t: Team):
        (snaps / f"snap_{t.observations:07d}.svg").write_text(
            render_svg(setup.grid, setup.sites, t.complex, t.robots))

    if sc.snapshot_every > 0:
        team.hooks.append((sc.snapshot_every, snapshot))
    if sc.diagnostics:
        team.holes_hook = lambda k, rep: write_diagnostics(out / f"holes_round_{k:04d}.csv", rep)
    summary = run_lcca(team)
    snapshot(team)
    cx.save(team.complex, out / "complex.json")
    write_metrics(out / "metrics.csv", team)
    write_trace(out / "trace.jsonl", team)
    ref = setup.cech().c2
    frac = len(team.complex.c2 & ref) / len(ref) if ref else 1.0
    info = dict(dataclasses.asdict(summary), cech_c2=len(ref), coverage=frac,
                c0=len(team.complex.c0), c1=len(team.complex.c1), c2=len(team.complex.c2))
    (out / "summary.json").write_text(json.dumps(info, indent=2, sort_keys=True) + "\n")
    print(f"{summary.stop_reason}: {summary.observations} observations, "
          f"{frac:.1%} of {len(ref)} reference triangles")
    return 0 if summary.stop_reason == "target" else 3


def _sweep(sc: Scenario, out: Path, name: str, column: str, values, run) -> int:
    setup = Setup(sc)
    rows = []
    for v in values:
        for seed in range(sc.seed, sc.seed + sc.seeds):
            s: RunSummary = run(setup, v, seed)
            rows.append((v, seed, s.observations, int(s.stop_reason == "target")))
            log.info("%s=%g seed=%d: %d observations (%s)", column, v, seed, s.observations, s.stop_reason)
    with open(out / f"{name}.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([column, "seed", "total_observations", "reached_target"])
        w.writerows(rows)
    means = {v: float(np.mean([r[2] for r in rows if r[0] == v])) for v in values}
    for v, m in means.items():
        print(f"{column}={v:g}: mean {m:.0f} observations")
    return 0 if all(r[3] for r in rows) else 3


def hiw_sweep_run(setup: Setup, fraction: float, seed: int) -> RunSummary:
    team = setup.team(seed, keep_trace=False)
    return run_lcca(team, switch_fraction=setup.sc.target - fraction)


def switch_sweep_run(setup: Setup, r: float, seed: int) -> RunSummary:
    eps2 = min(setup.sc.eps2, r / 2)
    team = setup.team(seed, setup.sc.walk_params(eps1=r, eps2=eps2), keep_trace=False)
    return run_lcca(team)


def cmd_hiw_sweep(sc: Scenario, out: Path) -> int:
    return _sweep(sc, out, "hiw_sweep", "fraction", sc.fractions, hiw_sweep_run)


def cmd_switch_sweep(sc: Scenario, out: Path) -> int:
    return _sweep(sc, out, "switch_sweep", "switch_r", sc.r_values, switch_sweep_run)


HANDLERS = {"place": cmd_place, "cech": cmd_cech, "lcca": cmd_lcca,
            "hiw_sweep": cmd_hiw_sweep, "switch_sweep": cmd_switch_sweep}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="landmark-complex", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON file with scenario fields")
    p.add_argument("--map", help=f"bundled map ({', '.join(BUNDLED)}) or image path")
    p.add_argument("--resolution", type=float, help="meters per cell for image maps")
    p.add_argument("--mode", choices=("r2", "se2"))
    p.add_argument("--ntheta", dest="n_theta", type=int)
    p.add_argument("--radius", type=float, help="footprint radius in meters")
    p.add_argument("--half-angle", dest="half_angle", type=float, help="footprint half angle in radians")
    p.add_argument("--clearance", type=int, help="robot radius in cells")
    p.add_argument("--delta-s", dest="delta_s", type=float)
    p.add_argument("--landmarks", help="landmark JSON written by `place`")
    p.add_argument("--robots", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--seeds", type=int, help="seeds per sweep point")
    p.add_argument("--target", type=float)
    p.add_argument("--eps1", type=float)
    p.add_argument("--eps2", type=float)
    p.add_argument("--max-observations", dest="max_observations", type=int)
    p.add_argument("--schedule", choices=("deterministic", "concurrent"))
    p.add_argument("--fractions", type=float, nargs="+")
    p.add_argument("--r-values", dest="r_values", type=float, nargs="+")
    p.add_argument("--snapshot-every", dest="snapshot_every", type=int)
    p.add_argument("--diagnostics", action="store_true", default=None,
                   help="dump hole-finding diagnostics for every HIW round")
    p.add_argument("--out-dir", default="out")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def scenario_from_args(args: argparse.Namespace) -> Scenario:
    d = {}
    if args.config:
        try:
            d = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {args.config!r}: {e}") from None
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
    names = {f.name for f in dataclasses.fields(Scenario)}
    for k, v in vars(args).items():
        if k in names and v is not None:
            d[k] = v
    try:
        sc = Scenario.from_dict(d)
    except TypeError as e:
        raise ConfigError(str(e)) from None
    sc.validate()
    return sc


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        sc = scenario_from_args(args)
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        return HANDLERS[args.command](sc, out)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except PlacementError as e:
        print(f"placement failed: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
