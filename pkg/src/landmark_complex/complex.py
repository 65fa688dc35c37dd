"""Abstract simplicial complexes over landmark IDs, truncated at dimension 2.

A complex is grown one observation at a time: every set of co-observed
landmarks is inserted together with all of its faces.  The stored complex
keeps 0-, 1- and 2-simplices only; larger observations contribute all of
their triangles.
"""
from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from itertools import combinations
from typing import Dict, Iterable, List, Set, Tuple

import numpy as np
import scipy.sparse as sps

Simplex = Tuple[int, ...]
Graph = Dict[int, Set[int]]


class SimplicialComplex:
    """Face-closed sets of vertices, edges and triangles.

    ``obs_count[v]`` counts the observation events that included landmark
    ``v``; ``obstacle_adjacent[v]`` is metadata fixed at placement time.
    Insertions are serialized by an internal lock so that concurrent robots
    see each observation batch applied atomically.
    """

    def __init__(self, obstacle_adjacent: Dict[int, bool] | None = None):
        self.c0: Set[Simplex] = set()
        self.c1: Set[Simplex] = set()
        self.c2: Set[Simplex] = set()
        self.obs_count: Dict[int, int] = {}
        self.obstacle_adjacent: Dict[int, bool] = dict(obstacle_adjacent or {})
        self._lock = threading.Lock()
        self._inserted: Set[Simplex] = set()  # observation sets already expanded

    def __repr__(self):
        return f"SimplicialComplex(c0={len(self.c0)}, c1={len(self.c1)}, c2={len(self.c2)})"

    def __eq__(self, other):
        if not isinstance(other, SimplicialComplex):
            return NotImplemented
        return (
            self.c0 == other.c0
            and self.c1 == other.c1
            and self.c2 == other.c2
            and self.obs_count == other.obs_count
            and self.obstacle_adjacent == other.obstacle_adjacent
        )

    @property
    def counts(self) -> Tuple[int, int, int]:
        return len(self.c0), len(self.c1), len(self.c2)

    def insert(self, landmarks: Iterable[int]) -> List[Simplex]:
        """Insert one observation; return the 2-simplices it added."""
        verts = sorted(set(int(v) for v in landmarks))
        if not verts:
            return []
        new = []
        key = tuple(verts)
        with self._lock:
            for v in verts:
                self.obs_count[v] = self.obs_count.get(v, 0) + 1
            if key in self._inserted:
                return new
            self._inserted.add(key)
            for v in verts:
                self.c0.add((v,))
            for e in combinations(verts, 2):
                self.c1.add(e)
            for t in combinations(verts, 3):
                if t not in self.c2:
                    self.c2.add(t)
                    new.append(t)
        return new

    def snapshot(self) -> "SimplicialComplex":
        with self._lock:
            out = SimplicialComplex(self.obstacle_adjacent)
            out.c0 = set(self.c0)
            out.c1 = set(self.c1)
            out.c2 = set(self.c2)
            out.obs_count = dict(self.obs_count)
            out._inserted = set(self._inserted)
        return out

    def vertices(self) -> List[int]:
        return sorted(v for (v,) in self.c0)

    def is_closed(self) -> bool:
        """Full scan of the closure invariant."""
        for t in self.c2:
            for e in combinations(t, 2):
                if e not in self.c1:
                    return False
        for e in self.c1:
            for v in e:
                if (v,) not in self.c0:
                    return False
        return all(self.obs_count.get(v, 0) >= 1 for (v,) in self.c0)

    def to_dict(self) -> dict:
        return {
            "c0": [list(s) for s in sorted(self.c0)],
            "c1": [list(s) for s in sorted(self.c1)],
            "c2": [list(s) for s in sorted(self.c2)],
            "obs_count": {str(k): v for k, v in sorted(self.obs_count.items())},
            "obstacle_adjacent": {str(k): bool(v) for k, v in sorted(self.obstacle_adjacent.items())},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimplicialComplex":
        out = cls({int(k): bool(v) for k, v in d.get("obstacle_adjacent", {}).items()})
        out.c0 = {tuple(int(v) for v in s) for s in d["c0"]}
        out.c1 = {tuple(int(v) for v in s) for s in d["c1"]}
        out.c2 = {tuple(int(v) for v in s) for s in d["c2"]}
        out.obs_count = {int(k): int(v) for k, v in d["obs_count"].items()}
        for group, dim in ((out.c0, 1), (out.c1, 2), (out.c2, 3)):
            for s in group:
                if len(s) != dim or list(s) != sorted(set(s)):
                    raise ValueError(f"malformed simplex {s!r}")
        return out


def insert_observation(complex: SimplicialComplex, landmarks: Iterable[int]) -> SimplicialComplex:
    complex.insert(landmarks)
    return complex


def dumps(complex: SimplicialComplex) -> str:
    return json.dumps(complex.to_dict(), sort_keys=True, separators=(",", ":"))


def loads(text: str) -> SimplicialComplex:
    return SimplicialComplex.from_dict(json.loads(text))


def save(complex: SimplicialComplex, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(complex))


def load(path) -> SimplicialComplex:
    with open(path) as fh:
        return loads(fh.read())


def one_skeleton(complex: SimplicialComplex) -> Graph:
    """Adjacency sets of the 1-skeleton; every edge has unit cost."""
    g: Graph = {v: set() for (v,) in complex.c0}
    for u, v in complex.c1:
        g[u].add(v)
        g[v].add(u)
    return g


@dataclass
class BoundaryMatrices:
    b1: sps.csr_matrix
    b2: sps.csr_matrix
    vertex_index: List[int]
    edge_index: List[Simplex]
    tri_index: List[Simplex]


def boundary_matrices(complex: SimplicialComplex) -> BoundaryMatrices:
    """Signed incidence matrices with lexicographic orientation.

    Edge (u, v), u < v, points u -> v, so column entries are -1 at u and +1
    at v.  Triangle (a, b, c) is oriented a -> b -> c -> a: edges (a, b) and
    (b, c) agree with it (+1), edge (a, c) opposes it (-1).
    """
    verts = complex.vertices()
    edges = sorted(complex.c1)
    tris = sorted(complex.c2)
    vpos = {v: i for i, v in enumerate(verts)}
    epos = {e: j for j, e in enumerate(edges)}

    rows, cols, vals = [], [], []
    for j, (u, v) in enumerate(edges):
        rows += [vpos[u], vpos[v]]
        cols += [j, j]
        vals += [-1, 1]
    b1 = sps.csr_matrix(
        (np.array(vals, dtype=np.int64), (rows, cols)), shape=(len(verts), len(edges))
    )

    rows, cols, vals = [], [], []
    for k, (a, b, c) in enumerate(tris):
        rows += [epos[(a, b)], epos[(b, c)], epos[(a, c)]]
        cols += [k, k, k]
        vals += [1, 1, -1]
    b2 = sps.csr_matrix(
        (np.array(vals, dtype=np.int64), (rows, cols)), shape=(len(edges), len(tris))
    )
    return BoundaryMatrices(b1, b2, verts, edges, tris)
