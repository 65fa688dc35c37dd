"""Complex builders shared by the tests."""
from landmark_complex.complex import SimplicialComplex

# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def grid_complex(n, removed=()):
    """Triangulated n x n vertex grid; each square split along its main diagonal.

    ``removed`` lists triangles (as vertex triples) left out, each opening a
    hole bounded by its three edges.
    """
    removed = {tuple(sorted(t)) for t in removed}
    k = SimplicialComplex()
    vid = lambda i, j: i * n + j
    for i in range(n - 1):
        for j in range(n - 1):
            a, b, c, d = vid(i, j), vid(i, j + 1), vid(i + 1, j), vid(i + 1, j + 1)
            for tri in ((a, b, d), (a, c, d)):
                k.insert(tri[:2])
                k.insert(tri[1:])
                k.insert((tri[0], tri[2]))
                if tuple(sorted(tri)) not in removed:
                    k.insert(tri)
    return k


def tri_edges(t):
    a, b, c = sorted(t)
    return {(a, b), (b, c), (a, c)}


def random_complex(rng, n_vertices, n_obs, max_size=4):
    k = SimplicialComplex()
    for _ in range(n_obs):
        size = int(rng.integers(1, max_size + 1))
        k.insert(rng.choice(n_vertices, size=min(size, n_vertices), replace=False).tolist())
    return k
