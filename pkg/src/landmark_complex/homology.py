"""Coverage-hole localization on a landmark complex.

Pipeline: random edge flow -> Laplacian flow onto the harmonic space ->
l1 tightening with a subgradient method -> threshold at a multiple of the
standard deviation -> connected components of the surviving edges.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Set, Tuple

import numpy as np
import scipy.sparse as sps

from .complex import BoundaryMatrices, SimplicialComplex, boundary_matrices
from .graphops import edges_to_graph, graph_components

log = logging.getLogger(__name__)


@dataclass
class HarmonicVector:
    x: np.ndarray
    converged: bool
    residual: float
    iterations: int


@dataclass
class HoleComponent:
    vertices: Set[int]
    edges: Set[Tuple[int, int]]


@dataclass
class HoleCycleSet:
    components: List[HoleComponent]
    y: np.ndarray
    selected: np.ndarray = field(default=None)
    dropped: List[HoleComponent] = field(default_factory=list)

    def __len__(self):
        return len(self.components)

    def __bool__(self):
        return bool(self.components)


def laplacian(b: BoundaryMatrices) -> sps.csr_matrix:
    """Edge Laplacian ``B1^T B1 + B2 B2^T`` (float, symmetric PSD)."""
    b1 = b.b1.astype(float)
    b2 = b.b2.astype(float)
    return sps.csr_matrix(b1.T @ b1 + b2 @ b2.T)


def gershgorin_bound(L) -> float:
    if L.shape[0] == 0:
        return 0.0
    return float(np.max(np.asarray(abs(L).sum(axis=1)).ravel()))


def flow_to_kernel(L, x0, tol: float = 1e-9, max_iters: int | None = None,
                   step: float | None = None) -> HarmonicVector:
    """Integrate ``dx/dt = -L x`` with explicit Euler until ``|L x|_inf <= tol``.

    The default step is the reciprocal of the Gershgorin bound on the
    largest eigenvalue, which keeps every mode strictly decaying.
    """
    x = np.array(x0, dtype=float)
    m = len(x)
    if m == 0:
        return HarmonicVector(x, True, 0.0, 0)
    if max_iters is None:
        max_iters = 200 * m
    if step is None:
        bound = gershgorin_bound(L)
        step = 1.0 / bound if bound > 0 else 1.0
    r = L @ x
    res = float(np.max(np.abs(r)))
    it = 0
    while res > tol and it < max_iters:
        x -= step * r
        r = L @ x
        res = float(np.max(np.abs(r)))
        it += 1
    if res > tol:
        log.warning("Laplacian flow did not converge: residual %.3g after %d steps", res, it)
    return HarmonicVector(x, res <= tol, res, it)


def tighten_l1(x, b2, alpha0: float | None = None, max_iters: int = 4000) -> np.ndarray:
    """Best iterate of ``z <- z - a_k B2^T sgn(B2 z + x)``, returned as ``x + B2 z``.

    ``a_k = alpha0 / sqrt(k)``; ``alpha0`` defaults to ``0.05 * |x|_inf``.
    """
    x = np.asarray(x, dtype=float)
    b2 = sps.csr_matrix(b2, dtype=float)
    p = b2.shape[1]
    if p == 0 or len(x) == 0:
        return x.copy()
    if alpha0 is None:
        alpha0 = 0.05 * float(np.max(np.abs(x)))
    if alpha0 == 0:
        return x.copy()
    b2t = sps.csr_matrix(b2.T)
    z = np.zeros(p)
    y = x.copy()
    best = y.copy()
    best_norm = float(np.abs(y).sum())
    for k in range(1, max_iters + 1):
        z -= (alpha0 / np.sqrt(k)) * (b2t @ np.sign(y))
        y = x + b2 @ z
        norm = float(np.abs(y).sum())
        if norm < best_norm:
            best_norm = norm
            best = y
    return best.copy()


def extract_holes(y, b: BoundaryMatrices, zeta_factor: float = 2.0,
                  obstacle_adjacent: Dict[int, bool] | None = None) -> HoleCycleSet:
    """Group the edges with ``|y_i| > zeta_factor * std(|y|)`` into components.

    Components made only of obstacle-adjacent landmarks surround real
    obstacles; they are moved to ``dropped``.
    """
    y = np.asarray(y, dtype=float)
    a = np.abs(y)
    if len(a) == 0 or not a.any():
        return HoleCycleSet([], y, np.zeros(len(a), dtype=bool))
    zeta = zeta_factor * float(np.std(a))
    selected = a > zeta
    edges = [b.edge_index[i] for i in np.flatnonzero(selected)]
    graph = edges_to_graph(edges)
    adj = obstacle_adjacent or {}
    keep, dropped = [], []
    for comp in graph_components(graph):
        comp_edges = {e for e in edges if e[0] in comp}
        hc = HoleComponent(set(comp), comp_edges)
        if comp and all(adj.get(v, False) for v in comp):
            dropped.append(hc)
        else:
            keep.append(hc)
    return HoleCycleSet(keep, y, selected, dropped)


@dataclass
class HoleReport:
    holes: HoleCycleSet
    boundary: BoundaryMatrices
    harmonic: HarmonicVector


def find_holes(complex: SimplicialComplex, rng=None, zeta_factor: float = 2.0,
               tol_flow: float = 1e-9, l1_iters: int = 4000) -> HoleReport:
    """Run the full localization pipeline on a snapshot of ``complex``."""
    rng = np.random.default_rng(rng)
    b = boundary_matrices(complex)
    m = len(b.edge_index)
    x0 = rng.standard_normal(m)
    harm = flow_to_kernel(laplacian(b), x0, tol=tol_flow)
    y = tighten_l1(harm.x, b.b2, max_iters=l1_iters)
    holes = extract_holes(y, b, zeta_factor, complex.obstacle_adjacent)
    return HoleReport(holes, b, harm)


def betti1_by_flow(complex: SimplicialComplex, rng=None, tol: float = 1e-9,
                   rank_tol: float = 1e-6) -> int:
    """Dimension of the harmonic space, probed with flows from random starts.

    Probes are added until one fails to raise the numerical rank of the
    collected limits.
    """
    rng = np.random.default_rng(rng)
    b = boundary_matrices(complex)
    m = len(b.edge_index)
    if m == 0:
        return 0
    L = laplacian(b)
    limits = []
    rank = 0
    while len(limits) < m + 1:
        x0 = rng.standard_normal(m)
        h = flow_to_kernel(L, x0, tol=tol)
        limits.append(h.x)
        s = np.linalg.svd(np.array(limits), compute_uv=False)
        new_rank = int(np.sum(s > rank_tol * max(np.linalg.norm(x0), 1.0)))
        if new_rank == rank:
            break
        rank = new_rank
    return rank


def write_diagnostics(path, report: HoleReport) -> None:
    """CSV of edge_id, u, v, x_i, y_i, selected_flag."""
    y = report.holes.y
    sel = report.holes.selected
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["edge_id", "u", "v", "x_i", "y_i", "selected_flag"])
        for i, (u, v) in enumerate(report.boundary.edge_index):
            w.writerow([i, u, v, repr(float(report.harmonic.x[i])), repr(float(y[i])), int(sel[i])])
