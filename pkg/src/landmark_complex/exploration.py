"""Multi-robot construction of the landmark complex.

Robots follow short Dubins-style trajectories (an arc of radius ``rho`` and
length ``s``, turning right or left) and record the set of landmarks seen at
every waypoint.  Three strategies are combined:

* random walk (RW): arc parameters drawn uniformly;
* informed walk (ISW): head for the least-observed landmark of the robot's
  Voronoi cell on the 1-skeleton, steering toward landmarks on the planned
  path;
* hole-informed walk (HIW): locate coverage holes of the current complex
  and send robots, one per hole, to visit every landmark around it.

Each robot is a generator that yields after every trajectory leg, and a
scheduler interleaves the legs.  This keeps runs reproducible from a single
seed while still exercising interleaved updates of the shared complex.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Generator, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from .complex import SimplicialComplex, one_skeleton
from .environment import World, step_pose, wrap_angle
from .graphops import bfs_distances, hungarian, shortest_path, voronoi
from .homology import find_holes

log = logging.getLogger(__name__)

Leg = Generator[None, None, object]


@dataclass
class RobotState:
    x: float
    y: float
    theta: float
    id: int = 0


@dataclass(frozen=True)
class ShortTermTrajectory:
    rho: float
    s: float
    beta: int  # +1 turns right, -1 turns left

    def __post_init__(self):
        if self.rho < 0 or self.s < 0:
            raise ValueError("rho and s must be non-negative")
        if self.beta not in (1, -1):
            raise ValueError("beta must be +1 or -1")
        if self.s > math.pi * self.rho * (1 + 1e-12):
            raise ValueError("arc longer than half a circle")


@dataclass
class WalkParams:
    rho_max: float
    s_max: float
    waypoint_ds: float
    gamma: int = 50
    omega: int = 2
    eta: int = 3
    delta: int = 10
    sigma: int = 5
    eps1: float = 0.004
    eps2: float = 0.0005
    window: int = 500
    max_observations: int = 150_000
    max_replans: int = 3

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not (self.rho_max > 0 and self.s_max > 0 and self.waypoint_ds > 0):
            raise ValueError("rho_max, s_max and waypoint_ds must be positive")
        if not 0 < self.eps2 < self.eps1:
            raise ValueError("need 0 < eps2 < eps1")
        for name in ("gamma", "omega", "eta", "delta", "sigma", "window", "max_observations"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.window < 1:
            raise ValueError("window must be at least 1")

    @classmethod
    def for_footprint(cls, radius: float, resolution: float, **kw) -> "WalkParams":
        """Trajectory scales tied to the sensing radius."""
        kw.setdefault("rho_max", 10 * radius)
        kw.setdefault("s_max", 4 * radius)
        kw.setdefault("waypoint_ds", resolution)
        return cls(**kw)


def generate_arc(pose: RobotState, stt: ShortTermTrajectory, waypoint_ds: float,
                 rho_max: float = math.inf) -> List[RobotState]:
    """Poses along the arc spaced at most ``waypoint_ds`` apart, start and end included.

    Heading decreases for right turns (``beta=+1``).  Radii within a hair of
    ``rho_max`` are treated as straight segments.
    """
    n = int(math.ceil(stt.s / waypoint_ds)) if stt.s > 0 else 0
    t = np.arange(0, n + 1) * (stt.s / n) if n else np.zeros(1)
    x0, y0, th0 = pose.x, pose.y, pose.theta
    if n == 0:
        xs, ys, ths = np.array([x0]), np.array([y0]), np.array([th0])
    elif stt.rho >= rho_max - 1e-9 * max(rho_max, 1.0):
        xs = x0 + t * math.cos(th0)
        ys = y0 + t * math.sin(th0)
        ths = np.full(n + 1, th0)
    else:
        b, r = stt.beta, stt.rho
        ths = th0 - b * t / r
        xs = x0 + b * r * (math.sin(th0) - np.sin(ths))
        ys = y0 + b * r * (np.cos(ths) - math.cos(th0))
    out = [RobotState(float(x), float(y), float(wrap_angle(th)), pose.id)
           for x, y, th in zip(xs, ys, ths)]
    out[0] = RobotState(x0, y0, th0, pose.id)
    return out


class GrowthTracker:
    """Windowed relative growth rate of the 2-simplex count.

    Every ``window`` observations, ``r`` becomes (triangles added in the
    window) / (triangles at the window start).  With an empty start the rate
    is 1 if anything was added, else 0.
    """

    def __init__(self, window: int, initial: float = 1.0):
        self.window = window
        self.r = initial
        self.start_total = 0
        self.new = 0
        self.count = 0

    def update(self, new_c2: int, total_c2: int) -> bool:
        """Record one observation; True when a window closed and ``r`` changed."""
        self.new += new_c2
        self.count += 1
        if self.count < self.window:
            return False
        self.r = growth_rate(self.new, self.start_total)
        self.start_total = total_c2
        self.new = 0
        self.count = 0
        return True


def growth_rate(new: int, start_total: int) -> float:
    if new == 0:
        return 0.0
    if start_total == 0:
        return 1.0
    return new / start_total


class StopExploration(Exception):
    """Raised inside robot generators when the run must end."""


@dataclass
class Observation:
    robot: int
    tick: int
    index: int
    pose: Tuple[float, float, float]
    landmarks: Tuple[int, ...]


@dataclass
class RunSummary:
    observations: int
    ticks: int
    stop_reason: str
    phase: int
    switch_observations: Optional[int] = None
    target_hits: int = 0
    hiw_rounds: int = 0


class Team:
    """Shared state of one exploration run.

    ``target`` (a set of triangles) with ``target_fraction`` makes the run
    stop as soon as that fraction of the target has been observed; the
    observation cap always applies.
    """

    def __init__(self, world: World, starts: Sequence[RobotState], params: WalkParams,
                 seed: int = 0, schedule: str = "deterministic",
                 complex: SimplicialComplex | None = None,
                 target: Set[Tuple[int, int, int]] | None = None,
                 target_fraction: float = 1.0, keep_trace: bool = True):
        if schedule not in ("deterministic", "concurrent"):
            raise ValueError(f"unknown schedule {schedule!r}")
        self.world = world
        self.params = params
        self.schedule = schedule
        self.robots = [RobotState(s.x, s.y, s.theta, i) for i, s in enumerate(starts)]
        for r in self.robots:
            if not world.is_valid(r.x, r.y):
                raise ValueError(f"robot {r.id} starts at an invalid pose ({r.x}, {r.y})")
        adj = {s.id: s.obstacle_adjacent for s in world.sites}
        self.complex = complex if complex is not None else SimplicialComplex(adj)
        seqs = np.random.SeedSequence(seed).spawn(len(self.robots) + 2)
        self.rngs = [np.random.default_rng(s) for s in seqs[: len(self.robots)]]
        self.sched_rng = np.random.default_rng(seqs[-2])
        self.holes_rng = np.random.default_rng(seqs[-1])
        self.tracker = GrowthTracker(params.window)
        self.target = set(target) if target is not None else None
        self.target_need = (math.ceil(target_fraction * len(self.target) - 1e-9)
                            if self.target is not None else None)
        self.target_hits = len(self.complex.c2 & self.target) if self.target is not None else 0
        self.switch_need: Optional[int] = None
        self.switched = False
        self.observations = 0
        self.tick = 0
        self.phase = 1
        self.last_seen: List[Tuple[int, ...]] = [()] * len(self.robots)
        self.keep_trace = keep_trace
        self.trace: List[Observation] = []
        self.samples: List[dict] = []
        self.hooks: List[Tuple[int, Callable[["Team"], None]]] = []
        self.hiw_rounds = 0
        self.holes_hook: Optional[Callable[[int, object], None]] = None
        self.switch_observations: Optional[int] = None
        for r in self.robots:
            self.observe(r)

    # -- sensing -----------------------------------------------------------
    def observe(self, robot: RobotState) -> Tuple[int, ...]:
        if self.observations >= self.params.max_observations:
            raise StopExploration("cap")
        ids = tuple(self.world.detect(robot.x, robot.y, robot.theta))
        new = self.complex.insert(ids)
        self.observations += 1
        self.last_seen[robot.id] = ids
        if self.keep_trace:
            self.trace.append(Observation(robot.id, self.tick, self.observations,
                                          (robot.x, robot.y, robot.theta), ids))
        if self.target is not None and new:
            self.target_hits += sum(1 for t in new if t in self.target)
        if self.tracker.update(len(new), len(self.complex.c2)):
            self._sample()
        for every, fn in self.hooks:
            if self.observations % every == 0:
                fn(self)
        if self.target_need is not None and self.target_hits >= self.target_need:
            raise StopExploration("target")
        if self.observations >= self.params.max_observations:
            raise StopExploration("cap")
        return ids

    def _sample(self):
        row = {
            "tick": self.tick,
            "observations_total": self.observations,
            "c0": len(self.complex.c0),
            "c1": len(self.complex.c1),
            "c2": len(self.complex.c2),
            "r": self.tracker.r,
            "phase": self.phase,
        }
        for r in self.robots:
            row[f"x_{r.id}"] = r.x
            row[f"y_{r.id}"] = r.y
            row[f"theta_{r.id}"] = r.theta
        self.samples.append(row)

    def should_switch(self) -> bool:
        """Phase-2 exit test: growth rate, or target coverage when requested."""
        if self.switch_need is not None:
            return self.target_hits >= self.switch_need
        return self.tracker.r <= self.params.eps1

    # -- motion ------------------------------------------------------------
    def execute(self, robot: RobotState, stt: ShortTermTrajectory) -> bool:
        """Drive one trajectory, observing at every waypoint.

        On collision the robot stops, turns to a uniformly random heading
        and observes once more.  Returns False if a collision occurred.
        """
        for wp in generate_arc(robot, stt, self.params.waypoint_ds, self.params.rho_max)[1:]:
            status, _ = step_pose(self.world.grid, robot, wp, self.world.valid)
            if status == "collided":
                robot.theta = float(self.rngs[robot.id].uniform(-math.pi, math.pi))
                self.observe(robot)
                return False
            robot.x, robot.y, robot.theta = wp.x, wp.y, wp.theta
            self.observe(robot)
        return True

    def sample_stt(self, robot: RobotState, beta: int | None = None) -> ShortTermTrajectory:
        rng = self.rngs[robot.id]
        rho = float(rng.uniform(0.0, self.params.rho_max))
        s = float(rng.uniform(0.0, min(self.params.s_max, math.pi * rho)))
        if beta is None:
            beta = 1 if rng.random() < 0.5 else -1
        return ShortTermTrajectory(rho, s, beta)

    def rw_observe(self, robot: RobotState) -> bool:
        return self.execute(robot, self.sample_stt(robot))

    def estt_observe(self, robot: RobotState, landmark: int) -> bool:
        """Arc that turns toward the side ``landmark`` is on."""
        side = self.world.side(robot.x, robot.y, robot.theta, landmark)
        return self.execute(robot, self.sample_stt(robot, 1 if side == "right" else -1))

    # -- strategies (generators, one leg per yield) --------------------------
    def rw_legs(self, robot: RobotState, n: int) -> Leg:
        for _ in range(n):
            self.rw_observe(robot)
            yield

    def navigate(self, robot: RobotState, goal: int) -> Leg:
        """Follow the 1-skeleton toward ``goal``; the generator returns True on success.

        The planned landmark path is shortcut to its furthest visible
        member, which the robot steers toward with one arc.  When nothing on
        the path is visible, ``sigma`` random legs are tried once before
        replanning; ``max_replans`` bounds the whole attempt.
        """
        p = self.params
        replans = 0
        while True:
            if not self.last_seen[robot.id]:
                yield from self.rw_legs(robot, p.sigma)
            path = []
            if self.last_seen[robot.id]:
                path = shortest_path(one_skeleton(self.complex), self.last_seen[robot.id], goal)
                if not path:
                    return False
            rest = list(path)
            walked = False
            last, repeats = None, 0
            while rest:
                seen = set(self.last_seen[robot.id])
                j = max((k for k, v in enumerate(rest) if v in seen), default=None)
                # at most sigma consecutive legs toward one landmark
                if j is not None and (rest[j] != last or repeats < p.sigma):
                    walked = False
                    repeats = repeats + 1 if rest[j] == last else 1
                    last = rest[j]
                    self.estt_observe(robot, rest[j])
                    if rest[j] == goal:
                        yield
                        return True
                    rest = rest[j:]
                    yield
                elif walked:
                    break
                else:
                    yield from self.rw_legs(robot, p.sigma)
                    walked = True
            replans += 1
            if replans > p.max_replans:
                return False

    def isw_select(self, robot: RobotState) -> Optional[Tuple[int, int]]:
        """Least-observed landmark in the robot's Voronoi cell and its hop distance."""
        if not self.last_seen[robot.id]:
            return None
        tess = voronoi(one_skeleton(self.complex), self.last_seen)
        cell = tess.cell(robot.id)
        if not cell:
            return None
        goal = min(cell, key=lambda v: (self.complex.obs_count.get(v, 0), v))
        return goal, int(tess.gscore[goal])

    def rw_isw(self, robot: RobotState) -> Leg:
        """Phase 2 controller for one robot."""
        p = self.params
        streak = 0
        while not self.should_switch():
            sel = self.isw_select(robot)
            if sel is None:
                self.rw_observe(robot)
                yield
                continue
            goal, g = sel
            if g <= p.omega or streak >= p.eta:
                yield from self.rw_legs(robot, p.delta)
                streak = 0
            else:
                yield from self.navigate(robot, goal)
                streak += 1

    def visit_hole(self, robot: RobotState, vertices: Iterable[int]) -> Leg:
        g = one_skeleton(self.complex)
        dist = bfs_distances(g, self.last_seen[robot.id])
        order = sorted(vertices, key=lambda v: (dist.get(v, math.inf), v))
        for v in order:
            yield from self.navigate(robot, v)

    def hiw_round(self) -> Leg:
        """Localize holes, assign robots, visit; ``yield`` marks a scheduler tick."""
        self.hiw_rounds += 1
        report = find_holes(self.complex.snapshot(), rng=self.holes_rng)
        if self.holes_hook is not None:
            self.holes_hook(self.hiw_rounds, report)
        comps = list(report.holes.components)
        n = len(self.robots)
        if not comps:
            yield from self.run_parallel([self.rw_legs(r, self.params.delta) for r in self.robots])
            return
        g = one_skeleton(self.complex)
        while comps:
            cost = np.full((n, len(comps)), np.inf)
            for i, r in enumerate(self.robots):
                if not self.last_seen[i]:
                    continue
                dist = bfs_distances(g, self.last_seen[i])
                for j, c in enumerate(comps):
                    d = [dist[v] for v in c.vertices if v in dist]
                    if d:
                        cost[i, j] = min(d)
            assign = hungarian(cost)
            tasks = []
            for i, r in enumerate(self.robots):
                if i in assign:
                    tasks.append(self.visit_hole(r, comps[assign[i]].vertices))
                else:
                    tasks.append(self.rw_legs(r, self.params.delta))
            yield from self.run_parallel(tasks)
            if not assign:
                break
            taken = set(assign.values())
            comps = [c for j, c in enumerate(comps) if j not in taken]
            g = one_skeleton(self.complex)

    # -- scheduling ----------------------------------------------------------
    def order(self) -> List[int]:
        idx = list(range(len(self.robots)))
        if self.schedule == "concurrent":
            self.sched_rng.shuffle(idx)
        return idx

    def run_parallel(self, tasks: List[Leg]) -> Leg:
        """Interleave robot generators one leg at a time until all finish."""
        live = dict(enumerate(tasks))
        while live:
            for i in self.order():
                if i not in live:
                    continue
                try:
                    next(live[i])
                except StopIteration:
                    del live[i]
            self.tick += 1
            yield

    def drain(self, gen: Leg) -> None:
        for _ in gen:
            pass


def run_lcca(team: Team, switch_fraction: float | None = None,
             use_eps2: bool | None = None) -> RunSummary:
    """Run the three phases until a stop condition.

    ``switch_fraction`` ends phase 2 once that fraction of the target has
    been seen instead of waiting for the growth rate to fall below
    ``eps1``.  Phase 3 ends at ``eps2`` unless a target is set (then only
    the target or the observation cap ends it).
    """
    p = team.params
    if use_eps2 is None:
        use_eps2 = team.target is None
    if switch_fraction is not None:
        if team.target is None:
            raise ValueError("switch_fraction needs a target")
        team.switch_need = math.ceil(switch_fraction * len(team.target) - 1e-9)
    reason = "eps2"
    try:
        team.phase = 1
        team.drain(team.run_parallel([team.rw_legs(r, p.gamma) for r in team.robots]))
        team.phase = 2
        team.drain(team.run_parallel([team.rw_isw(r) for r in team.robots]))
        team.switch_observations = team.observations
        team.phase = 3
        # a fresh window so phase 3 judges its own progress
        team.tracker = GrowthTracker(p.window, initial=team.tracker.r)
        team.tracker.start_total = len(team.complex.c2)
        while True:
            if use_eps2 and team.tracker.r <= p.eps2:
                break
            team.drain(team.hiw_round())
    except StopExploration as e:
        reason = str(e)
    return RunSummary(team.observations, team.tick, reason, team.phase,
                      team.switch_observations, team.target_hits, team.hiw_rounds)


def run_random_walk(team: Team) -> RunSummary:
    """Baseline: every robot random-walks until a stop condition."""
    def forever(r):
        while True:
            team.rw_observe(r)
            yield

    reason = "cap"
    try:
        team.drain(team.run_parallel([forever(r) for r in team.robots]))
    except StopExploration as e:
        reason = str(e)
    return RunSummary(team.observations, team.tick, reason, team.phase, None, team.target_hits)


def random_starts(world: World, n: int, rng) -> List[RobotState]:
    rng = np.random.default_rng(rng)
    iy, ix = np.nonzero(world.valid)
    if len(iy) == 0:
        raise ValueError("no valid start cell")
    pick = rng.choice(len(iy), size=n, replace=len(iy) < n)
    cx, cy = world.grid.cell_center(ix[pick], iy[pick])
    th = rng.uniform(-math.pi, math.pi, size=n)
    return [RobotState(float(x), float(y), float(t), i) for i, (x, y, t) in enumerate(zip(cx, cy, th))]


def write_metrics(path, team: Team) -> None:
    cols = ["tick", "observations_total", "c0", "c1", "c2", "r", "phase"]
    for r in team.robots:
        cols += [f"x_{r.id}", f"y_{r.id}", f"theta_{r.id}"]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        for row in team.samples:
            w.writerow(row)


def write_trace(path, team: Team) -> None:
    with open(path, "w") as fh:
        for o in team.trace:
            fh.write(json.dumps({"robot": o.robot, "tick": o.tick, "index": o.index,
                                 "pose": list(o.pose), "landmarks": list(o.landmarks)}) + "\n")
