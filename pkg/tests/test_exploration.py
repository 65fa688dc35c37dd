import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from landmark_complex.complex import SimplicialComplex
from landmark_complex.environment import LandmarkSite, OccupancyGrid, SensorFootprint, World
from landmark_complex.exploration import (
    GrowthTracker,
    RobotState,
    ShortTermTrajectory,
    StopExploration,
    Team,
    WalkParams,
    generate_arc,
    growth_rate,
    random_starts,
    run_lcca,
    run_random_walk,
    write_metrics,
    write_trace,
)
from landmark_complex.graphops import bfs_distances


def room(n=40, res=0.1):
    occ = np.zeros((n, n), bool)
    occ[0, :] = occ[-1, :] = occ[:, 0] = occ[:, -1] = True
    return OccupancyGrid(occ, res)


def params(**kw):
    kw.setdefault("rho_max", 2.0)
    kw.setdefault("s_max", 1.0)
    kw.setdefault("waypoint_ds", 0.1)
    return WalkParams(**kw)


# --- arcs -------------------------------------------------------------------------

def test_quarter_circle_endpoint():
    end = generate_arc(RobotState(0, 0, math.pi / 2), ShortTermTrajectory(1.0, math.pi / 2, 1), 0.01)[-1]
    assert abs(end.x - 1) < 1e-9 and abs(end.y - 1) < 1e-9 and abs(end.theta) < 1e-9


def test_zero_length_arc_is_start():
    start = RobotState(1.0, 2.0, 0.3)
    assert generate_arc(start, ShortTermTrajectory(0.0, 0.0, -1), 0.1) == [start]


def closed_form_end(x, y, th, rho, s, beta):
    # centre of the turning circle sits at distance rho on the turn side
    cx = x + beta * rho * math.sin(th)
    cy = y - beta * rho * math.cos(th)
    phi = th - beta * s / rho
    return cx - beta * rho * math.sin(phi), cy + beta * rho * math.cos(phi), phi


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-math.pi, math.pi),
       st.floats(0.05, 5), st.floats(0, 1), st.sampled_from([1, -1]))
@settings(max_examples=200, deadline=None)
def test_arc_matches_closed_form(x, y, th, rho, frac, beta):
    s = frac * math.pi * rho * 0.999
    pts = generate_arc(RobotState(x, y, th), ShortTermTrajectory(rho, s, beta), 0.05)
    ex, ey, eth = closed_form_end(x, y, th, rho, s, beta)
    assert abs(pts[-1].x - ex) < 1e-9 and abs(pts[-1].y - ey) < 1e-9
    assert abs(math.remainder(pts[-1].theta - eth, 2 * math.pi)) < 1e-9
    for p, q in zip(pts, pts[1:]):
        assert math.hypot(p.x - q.x, p.y - q.y) <= 0.05 + 1e-12
    # every waypoint stays on the turning circle
    cx = x + beta * rho * math.sin(th)
    cy = y - beta * rho * math.cos(th)
    for p in pts:
        assert abs(math.hypot(p.x - cx, p.y - cy) - rho) < 1e-9


def test_beta_flip_mirrors_across_heading():
    start = RobotState(0, 0, 0.0)
    r = generate_arc(start, ShortTermTrajectory(1.5, 2.0, 1), 0.1)[-1]
    l = generate_arc(start, ShortTermTrajectory(1.5, 2.0, -1), 0.1)[-1]
    assert math.isclose(r.x, l.x, abs_tol=1e-12) and math.isclose(r.y, -l.y, abs_tol=1e-12)
    assert r.y < 0  # right turn from heading +x goes to -y


def test_straight_limit():
    pts = generate_arc(RobotState(0, 0, 0.0), ShortTermTrajectory(5.0, 2.0, 1), 0.5, rho_max=5.0)
    assert all(abs(p.y) < 1e-12 and p.theta == 0.0 for p in pts)
    assert math.isclose(pts[-1].x, 2.0)


def test_trajectory_bounds():
    with pytest.raises(ValueError):
        ShortTermTrajectory(1.0, 4.0, 1)
    with pytest.raises(ValueError):
        ShortTermTrajectory(1.0, 1.0, 0)
    with pytest.raises(ValueError):
        ShortTermTrajectory(-1.0, 0.0, 1)


def test_walk_params_validation():
    with pytest.raises(ValueError):
        params(eps1=0.001, eps2=0.001)
    with pytest.raises(ValueError):
        params(window=0)
    with pytest.raises(ValueError):
        params(rho_max=0.0)


# --- growth rate -------------------------------------------------------------------

def test_growth_rate_rules():
    assert growth_rate(0, 10) == 0.0
    assert growth_rate(10, 10) == 1.0
    assert growth_rate(3, 0) == 1.0
    assert growth_rate(0, 0) == 0.0


def test_tracker_windows():
    t = GrowthTracker(3)
    assert t.r == 1.0
    assert not t.update(2, 2) and not t.update(0, 2)
    assert t.update(1, 3) and t.r == 1.0  # empty start, something added
    t.update(3, 6)
    t.update(0, 6)
    assert t.update(0, 6) and t.r == 1.0  # doubled from 3 to 6
    for _ in range(3):
        t.update(0, 6)
    assert t.r == 0.0


# --- observation and walks ------------------------------------------------------------

def tri_world():
    g = room()
    sites = [LandmarkSite(0, 2.55, 1.95), LandmarkSite(1, 2.55, 2.05), LandmarkSite(2, 2.65, 2.0),
             LandmarkSite(3, 0.35, 3.65)]
    return World(g, sites, SensorFootprint(1.0, math.pi / 3))


def test_observation_inserts_faces_or_nothing():
    w = tri_world()
    team = Team(w, [RobotState(2.0, 2.0, 0.0)], params())
    assert team.last_seen[0] == (0, 1, 2)
    assert team.complex.c2 == {(0, 1, 2)}
    before = team.complex.counts
    team.robots[0].theta = math.pi
    assert team.observe(team.robots[0]) == ()
    assert team.complex.counts == before
    assert team.observations == 2 and len(team.trace) == 2


def test_robot_stays_in_sealed_pocket():
    occ = np.ones((9, 9), bool)
    occ[3:6, 3:6] = False
    g = OccupancyGrid(occ, 0.1)
    w = World(g, [], SensorFootprint(0.5))
    team = Team(w, [RobotState(0.45, 0.45, 0.0)], params(rho_max=1.0, s_max=1.0, waypoint_ds=0.05,
                                                          max_observations=10**9))
    r = team.robots[0]
    for _ in range(1000):
        team.rw_observe(r)
        assert 0.3 <= r.x < 0.6 and 0.3 <= r.y < 0.6
    assert team.complex.counts == (0, 0, 0)


def test_every_waypoint_collision_free():
    g = room()
    g.occupied[10:30, 18:22] = True
    w = World(g, [], SensorFootprint(0.5), clearance=1)
    team = Team(w, random_starts(w, 2, 0), params(max_observations=3000), seed=4)
    run_random_walk(team)
    assert all(w.is_valid(o.pose[0], o.pose[1]) for o in team.trace)


def ring_world(n_sites=8, radius=1.3):
    g = room(60, 0.1)
    ang = 2 * math.pi * np.arange(n_sites) / n_sites
    sites = [LandmarkSite(i, 3.0 + radius * math.cos(a), 3.0 + radius * math.sin(a))
             for i, a in enumerate(ang)]
    return World(g, sites, SensorFootprint(1.2, 5 * math.pi / 12), clearance=1)


def test_seeded_runs_are_bit_identical():
    w = ring_world()
    runs = []
    for _ in range(2):
        team = Team(w, random_starts(w, 3, 7), params(max_observations=4000, window=200), seed=7)
        run_lcca(team)
        runs.append(([(o.robot, o.pose, o.landmarks) for o in team.trace], team.samples))
    assert runs[0] == runs[1]


def test_concurrent_schedule_reproducible_and_valid():
    w = ring_world()
    traces = []
    for _ in range(2):
        team = Team(w, random_starts(w, 3, 1), params(max_observations=3000, window=200), seed=1,
                    schedule="concurrent")
        run_lcca(team)
        traces.append([o.pose for o in team.trace])
    assert traces[0] == traces[1]
    with pytest.raises(ValueError):
        Team(w, random_starts(w, 1, 1), params(), schedule="threads")


def test_invalid_start_rejected():
    w = ring_world()
    with pytest.raises(ValueError):
        Team(w, [RobotState(0.05, 0.05, 0.0)], params())


# --- steering ---------------------------------------------------------------------------

def test_estt_turn_direction(monkeypatch):
    g = room()
    ahead = LandmarkSite(0, 2.5, 2.0)
    left = LandmarkSite(1, 2.0, 2.5)
    w = World(g, [ahead, left], SensorFootprint(1.0, math.pi))
    team = Team(w, [RobotState(2.0, 2.0, 0.0)], params())
    taken = []
    monkeypatch.setattr(team, "execute", lambda robot, stt: taken.append(stt.beta) or True)
    team.estt_observe(team.robots[0], 0)
    team.estt_observe(team.robots[0], 1)
    assert taken == [1, -1]


def test_estt_beats_random_leg_on_average():
    g = OccupancyGrid(np.zeros((200, 200), bool), 0.05)
    target = LandmarkSite(0, 5.0, 5.0)
    w = World(g, [target], SensorFootprint(2.0, math.pi / 2))
    p = params(rho_max=1.5, s_max=1.0, waypoint_ds=0.05, max_observations=10**9)
    steer, blind = [], []
    rng = np.random.default_rng(3)
    for trial in range(50):
        bearing = rng.uniform(-1.2, 1.2)
        d = rng.uniform(1.0, 1.8)
        th = rng.uniform(-math.pi, math.pi)
        start = RobotState(5.0 - d * math.cos(th + bearing), 5.0 - d * math.sin(th + bearing), th)
        for out, move in ((steer, "estt"), (blind, "rw")):
            team = Team(w, [start], p, seed=trial)
            r = team.robots[0]
            assert 0 in team.last_seen[0]
            for _ in range(3):
                if move == "estt" and 0 in team.last_seen[0]:
                    team.estt_observe(r, 0)
                else:
                    team.rw_observe(r)
            out.append(math.hypot(r.x - 5.0, r.y - 5.0))
    assert np.mean(steer) < np.mean(blind)


# --- ISW goal selection ------------------------------------------------------------------

def chain_team(n_robots, seen):
    w = ring_world()
    team = Team(w, random_starts(w, n_robots, 0), params())
    team.complex = SimplicialComplex()
    for a in range(7):
        team.complex.insert([a, a + 1])
    team.complex.obs_count = {v: 5 for v in range(8)}
    team.last_seen = list(seen)
    return team


def test_isw_prefers_least_observed():
    team = chain_team(1, [(0,)])
    team.complex.obs_count[3] = 1
    team.complex.obs_count[5] = 3
    assert team.isw_select(team.robots[0]) == (3, 3)


def test_isw_tie_lowest_id():
    team = chain_team(1, [(4,)])
    assert team.isw_select(team.robots[0]) == (0, 4)


def test_isw_goals_stay_in_own_cell(rng):
    for _ in range(20):
        team = chain_team(2, [(0,), (7,)])
        team.complex.obs_count = {v: int(rng.integers(1, 5)) for v in range(8)}
        g = {v: set() for v in range(8)}
        for a in range(7):
            g[a].add(a + 1)
            g[a + 1].add(a)
        d0, d1 = bfs_distances(g, [0]), bfs_distances(g, [7])
        for i, r in enumerate(team.robots):
            goal, gs = team.isw_select(r)
            mine, other = (d0, d1) if i == 0 else (d1, d0)
            assert (mine[goal], i) <= (other[goal], 1 - i)
            assert gs == mine[goal]


def test_isw_without_observation_signals_fallback():
    team = chain_team(1, [()])
    assert team.isw_select(team.robots[0]) is None


def test_phase_two_falls_back_to_random_walk():
    # no landmark visible anywhere near the start: RW until something is seen
    g = room(80, 0.1)
    w = World(g, [LandmarkSite(0, 7.0, 7.0)], SensorFootprint(1.0, math.pi))
    team = Team(w, [RobotState(1.0, 1.0, 0.0)], params(gamma=0, max_observations=500), seed=2)
    assert team.last_seen[0] == ()
    summary = run_lcca(team)
    assert summary.stop_reason == "cap" and team.observations == 500


# --- navigation ---------------------------------------------------------------------------

def drive(gen):
    try:
        while True:
            next(gen)
    except StopIteration as stop:
        return stop.value


def test_navigate_to_visible_goal_takes_one_leg(monkeypatch):
    w = tri_world()
    team = Team(w, [RobotState(2.0, 2.0, 0.0)], params())
    legs = []
    monkeypatch.setattr(team, "estt_observe", lambda r, lm: legs.append(lm))
    assert drive(team.navigate(team.robots[0], 2)) is True
    assert legs == [2]


def test_navigate_unreachable_goal_fails():
    w = tri_world()
    team = Team(w, [RobotState(2.0, 2.0, 0.0)], params())
    team.complex.insert([3])  # isolated vertex, no edge to the seen triangle
    assert drive(team.navigate(team.robots[0], 3)) is False


def corridor_world():
    occ = np.ones((20, 120), bool)
    occ[2:18, 1:119] = False
    g = OccupancyGrid(occ, 0.1)
    sites = [LandmarkSite(i, 0.5 + 1.0 * i, 1.0) for i in range(12)]
    return World(g, sites, SensorFootprint(2.5, 5 * math.pi / 12))


def test_corridor_navigation_follows_path_order(monkeypatch):
    import landmark_complex.exploration as ex

    w = corridor_world()
    events = []
    plan = ex.shortest_path
    monkeypatch.setattr(ex, "shortest_path", lambda *a: events.append("plan") or plan(*a))
    wins = 0
    for seed in range(10):
        team = Team(w, [RobotState(0.3, 1.0, 0.0)], params(rho_max=12.0, s_max=1.5, waypoint_ds=0.1,
                                                          max_observations=10**6), seed=seed)
        for a in range(11):
            team.complex.insert([a, a + 1])
        steer = team.estt_observe
        team.estt_observe = lambda r, lm: events.append(lm) or steer(r, lm)
        events.clear()
        ok = drive(team.navigate(team.robots[0], 8))
        wins += ok
        if ok:
            assert events[-1] == 8
            assert 8 in team.trace[-1].landmarks or any(8 in o.landmarks for o in team.trace[-20:])
        # within one plan the steering targets never move back along the corridor
        cur = []
        for e in events + ["plan"]:
            if e == "plan":
                assert cur == sorted(cur)
                cur = []
            else:
                cur.append(e)
    assert wins >= 7


def test_navigate_success_implies_goal_observed():
    w = ring_world()
    for seed in range(5):
        team = Team(w, random_starts(w, 1, seed), params(max_observations=20000), seed=seed)
        for a in range(8):
            team.complex.insert([a, (a + 1) % 8])
        start = len(team.trace)
        if drive(team.navigate(team.robots[0], (seed * 3) % 8)):
            assert any((seed * 3) % 8 in o.landmarks for o in team.trace[start - 1:])


# --- HIW -----------------------------------------------------------------------------------

def hollow_ring_team(n_robots, seed=0, **kw):
    w = ring_world()
    team = Team(w, random_starts(w, n_robots, seed), params(max_observations=200000, **kw), seed=seed)
    team.complex = SimplicialComplex({s.id: False for s in w.sites})
    for a in range(8):
        team.complex.insert([a, (a + 1) % 8])
    for r in team.robots:
        team.observe(r)
    return team


def test_hiw_visits_every_hole_vertex():
    team = hollow_ring_team(1, seed=0)
    assert team.last_seen[0]
    start = len(team.trace)
    team.drain(team.hiw_round())
    seen = set().union(*(o.landmarks for o in team.trace[start:]))
    assert set(range(8)) <= seen


def test_hiw_obstacle_only_components_are_skipped(monkeypatch):
    team = hollow_ring_team(1)
    team.complex.obstacle_adjacent = {v: True for v in range(8)}
    calls = []
    monkeypatch.setattr(team, "visit_hole", lambda r, vs: calls.append(vs) or iter(()))
    team.drain(team.hiw_round())
    assert calls == []


def test_two_robots_two_holes_one_each(monkeypatch):
    g = room(80, 0.1)
    sites = []
    for cx0 in (2.0, 6.0):
        for k in range(6):
            a = 2 * math.pi * k / 6
            sites.append(LandmarkSite(len(sites), cx0 + math.cos(a), 4.0 + math.sin(a)))
    w = World(g, sites, SensorFootprint(1.0))
    starts = [RobotState(6.0, 4.0, 0.0), RobotState(2.0, 4.0, 0.0)]
    team = Team(w, starts, params())
    team.complex = SimplicialComplex()
    for base in (0, 6):
        for k in range(6):
            team.complex.insert([base + k, base + (k + 1) % 6])
    team.last_seen = [(6,), (0,)]
    served = []
    monkeypatch.setattr(team, "visit_hole", lambda r, vs: served.append((r.id, frozenset(vs))) or iter(()))
    team.drain(team.hiw_round())
    assert sorted(served) == [(0, frozenset(range(6, 12))), (1, frozenset(range(6)))]


# --- LCCA ------------------------------------------------------------------------------------

def test_isw_streak_never_exceeds_eta(monkeypatch):
    w = ring_world(12, 1.8)
    team = Team(w, random_starts(w, 2, 3), params(omega=0, eta=2, max_observations=15000, window=300),
                seed=3)
    log = {0: [], 1: []}
    nav, rw = team.navigate, team.rw_legs

    def spy_nav(r, goal):
        log[r.id].append("nav")
        return nav(r, goal)

    def spy_rw(r, n):
        if n == team.params.delta:
            log[r.id].append("rw")
        return rw(r, n)

    monkeypatch.setattr(team, "navigate", spy_nav)
    monkeypatch.setattr(team, "rw_legs", spy_rw)
    team.switch_need = 10**9  # stay in phase 2
    try:
        team.drain(team.run_parallel([team.rw_isw(r) for r in team.robots]))
    except StopExploration:
        pass
    for events in log.values():
        assert "nav" in events
        streak = 0
        for e in events:
            streak = streak + 1 if e == "nav" else 0
            assert streak <= 2


def test_complex_only_grows_and_outputs(tmp_path):
    w = ring_world()
    team = Team(w, random_starts(w, 2, 0), params(max_observations=6000, window=250), seed=0)
    sizes = []
    team.hooks.append((100, lambda t: sizes.append(t.complex.counts)))
    summary = run_lcca(team)
    assert summary.observations == team.observations <= 6000
    for a, b in zip(sizes, sizes[1:]):
        assert all(x <= y for x, y in zip(a, b))
    assert team.complex.is_closed()
    write_metrics(tmp_path / "m.csv", team)
    write_trace(tmp_path / "t.jsonl", team)
    rows = (tmp_path / "m.csv").read_text().splitlines()
    assert len(rows) - 1 == len(team.samples) == team.observations // 250
    assert len((tmp_path / "t.jsonl").read_text().splitlines()) == team.observations


def test_target_stop():
    w = ring_world()
    target = {(0, 1, 2), (1, 2, 3)}
    team = Team(w, random_starts(w, 2, 0), params(max_observations=50000), seed=0,
                target=target, target_fraction=0.5)
    s = run_lcca(team)
    assert s.stop_reason == "target" and s.target_hits >= 1
    assert target & team.complex.c2
