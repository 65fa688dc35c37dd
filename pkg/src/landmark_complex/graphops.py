"""Graph search on the 1-skeleton, grid labeling and assignment."""
from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, Hashable, Iterable, List, Mapping, Sequence, Set

import numpy as np

INF = math.inf

Graph = Dict[int, Set[int]]


@dataclass
class Tessellation:
    owner: Dict[int, int] = field(default_factory=dict)
    gscore: Dict[int, float] = field(default_factory=dict)

    def cell(self, robot: int) -> List[int]:
        return sorted(v for v, o in self.owner.items() if o == robot)


def voronoi(graph: Mapping[int, Iterable[int]], seeds: Sequence[Iterable[int]]) -> Tessellation:
    """Multi-source unit-cost Dijkstra; ``seeds[i]`` are robot i's observed landmarks.

    Owners are robot indices (0-based), -1 for unreached vertices.  Equal
    distances go to the lower robot index.  Seeds absent from the graph are
    ignored.
    """
    g = {v: INF for v in graph}
    owner = {v: -1 for v in graph}
    heap = []
    for i, seed in enumerate(seeds):
        for v in seed:
            if v in g and (g[v] > 0 or owner[v] > i):
                g[v] = 0
                owner[v] = i
    for v in graph:
        if g[v] == 0:
            heap.append((0, owner[v], v))
    heapq.heapify(heap)
    done = set()
    while heap:
        d, o, q = heapq.heappop(heap)
        if q in done or d > g[q] or o != owner[q]:
            continue
        done.add(q)
        for w in graph[q]:
            nd = d + 1
            if nd < g[w] or (nd == g[w] and o < owner[w] and w not in done):
                g[w] = nd
                owner[w] = o
                heapq.heappush(heap, (nd, o, w))
    return Tessellation(owner, g)


def bfs_distances(graph: Mapping[int, Iterable[int]], sources: Iterable[int]) -> Dict[int, int]:
    dist = {}
    queue = deque()
    for s in sorted(set(sources)):
        if s in graph:
            dist[s] = 0
            queue.append(s)
    while queue:
        q = queue.popleft()
        for w in sorted(graph[q]):
            if w not in dist:
                dist[w] = dist[q] + 1
                queue.append(w)
    return dist


def shortest_path(graph: Mapping[int, Iterable[int]], sources: Iterable[int], goal: int) -> List[int]:
    """Minimal-hop path from any source to ``goal``; [] when unreachable."""
    if goal not in graph:
        return []
    parent: Dict[int, int | None] = {}
    queue = deque()
    for s in sorted(set(sources)):
        if s in graph:
            parent[s] = None
            queue.append(s)
    while queue:
        q = queue.popleft()
        if q == goal:
            break
        for w in sorted(graph[q]):
            if w not in parent:
                parent[w] = q
                queue.append(w)
    if goal not in parent:
        return []
    path = [goal]
    while parent[path[-1]] is not None:
        path.append(parent[path[-1]])
    return path[::-1]


def graph_components(graph: Mapping[int, Iterable[int]]) -> List[Set[int]]:
    """Connected components, ordered by smallest member."""
    seen: Set[int] = set()
    comps = []
    for v in sorted(graph):
        if v in seen:
            continue
        comp = {v}
        queue = deque([v])
        while queue:
            q = queue.popleft()
            for w in graph[q]:
                if w not in comp:
                    comp.add(w)
                    queue.append(w)
        seen |= comp
        comps.append(comp)
    return comps


def edges_to_graph(edges: Iterable[tuple]) -> Graph:
    g: Graph = {}
    for u, v in edges:
        g.setdefault(u, set()).add(v)
        g.setdefault(v, set()).add(u)
    return g


def label_components(mask: np.ndarray):
    """4-connected labeling of a 2-D boolean mask.

    Returns ``(labels, n)``; labels run 1..n in order of each component's
    first cell in row-major order, background is 0.
    """
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    big = h * w
    lab = np.where(mask, np.arange(big).reshape(h, w), big)
    while True:
        prev = lab
        nxt = lab.copy()
        np.minimum(nxt[1:, :], lab[:-1, :], out=nxt[1:, :])
        np.minimum(nxt[:-1, :], lab[1:, :], out=nxt[:-1, :])
        np.minimum(nxt[:, 1:], lab[:, :-1], out=nxt[:, 1:])
        np.minimum(nxt[:, :-1], lab[:, 1:], out=nxt[:, :-1])
        nxt = np.where(mask, nxt, big)
        # pointer jumping: every cell adopts the label held by its label's root
        flat = nxt.ravel()
        inside = flat < big
        flat[inside] = flat[flat[inside]]
        lab = flat.reshape(h, w)
        if np.array_equal(lab, prev):
            break
    roots = np.unique(lab[mask])
    out = np.zeros((h, w), dtype=np.int64)
    if len(roots):
        out[mask] = np.searchsorted(roots, lab[mask]) + 1
    return out, len(roots)


def mask_components(mask: np.ndarray) -> List[np.ndarray]:
    """Components of a 2-D mask as (k, 2) arrays of (iy, ix), ordered by first cell."""
    labels, n = label_components(mask)
    return [np.argwhere(labels == k) for k in range(1, n + 1)]


def _hungarian_square(c: np.ndarray) -> np.ndarray:
    """Row -> column minimum-cost assignment of a finite square matrix, O(n^3)."""
    n = c.shape[0]
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = np.zeros(n + 1, dtype=int)
    way = np.zeros(n + 1, dtype=int)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(n + 1, INF)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            cur = c[i0 - 1] - u[i0] - v[1:]
            free = ~used[1:]
            better = free & (cur < minv[1:])
            minv[1:][better] = cur[better]
            way[1:][better] = j0
            cand = np.where(free, minv[1:], INF)
            j1 = int(np.argmin(cand)) + 1
            delta = cand[j1 - 1]
            u[p[used]] += delta
            v[used] -= delta
            minv[~used] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break
    rows = np.zeros(n, dtype=int)
    for j in range(1, n + 1):
        rows[p[j] - 1] = j - 1
    return rows


def hungarian(cost) -> Dict[int, int]:
    """Minimum-cost injective assignment of rows (robots) to columns (components).

    Rectangular matrices are padded with zero-cost dummies.  Infinite entries
    mean unreachable: such pairs are never returned, and a row with no finite
    entry stays unassigned.
    """
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2 or cost.size == 0:
        return {}
    n_rows, n_cols = cost.shape
    finite = np.isfinite(cost)
    if not finite.any():
        return {}
    big = (np.abs(cost[finite]).sum() + 1.0) * (n_rows + n_cols)
    n = max(n_rows, n_cols)
    sq = np.zeros((n, n))
    sq[:n_rows, :n_cols] = np.where(finite, cost, big)
    cols = _hungarian_square(sq)
    return {i: int(cols[i]) for i in range(n_rows) if cols[i] < n_cols and finite[i, cols[i]]}
