"""Find the holes of a small triangulated patch.

A 5 x 5 grid of vertices is triangulated and two triangles are left out.
Each probe starts the harmonic flow from a random edge vector, tightens it
in l1 and thresholds it.  A probe usually reports the hole that dominates its
random start, so the demo runs several probes; during exploration the same
effect is covered by repeated homology rounds.

    python3 demos/holes_in_a_complex.py
"""
from landmark_complex import SimplicialComplex, betti1_by_flow, find_holes

N = 5
MISSING = {(6, 7, 12), (16, 17, 22)}

k = SimplicialComplex()
for i in range(N - 1):
    for j in range(N - 1):
        a, b, c, d = i * N + j, i * N + j + 1, (i + 1) * N + j, (i + 1) * N + j + 1
        for tri in ((a, b, d), (a, c, d)):
            if tuple(sorted(tri)) in MISSING:
                for e in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[0], tri[2])):
                    k.insert(e)
            else:
                k.insert(tri)

print(f"complex: {k}")
print(f"first Betti number from the flow: {betti1_by_flow(k, rng=0)}")

found = set()
for seed in range(6):
    report = find_holes(k, rng=seed)
    holes = [tuple(sorted(c.vertices)) for c in report.holes.components]
    found.update(holes)
    print(f"probe {seed}: {report.harmonic.iterations} flow steps, holes {holes}")
print(f"union of probes: {sorted(found)}; removed triangles: {sorted(MISSING)}")
