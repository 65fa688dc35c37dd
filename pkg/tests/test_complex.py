from collections import Counter
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from landmark_complex import complex as cx
from landmark_complex.complex import SimplicialComplex, boundary_matrices, one_skeleton

observations = st.lists(st.sets(st.integers(0, 12), min_size=0, max_size=6), max_size=25)


def test_first_observation_of_the_tour():
    # reference example: the first observation {v2, v3, v4} and its faces
    k = SimplicialComplex()
    k.insert({2, 3, 4})
    assert k.c0 == {(2,), (3,), (4,)}
    assert k.c1 == {(2, 3), (2, 4), (3, 4)}
    assert k.c2 == {(2, 3, 4)}


def test_single_vertex():
    k = SimplicialComplex()
    k.insert({1})
    assert k.c0 == {(1,)} and not k.c1 and not k.c2


def test_empty_observation_is_noop():
    k = SimplicialComplex()
    assert k.insert(set()) == []
    assert k.counts == (0, 0, 0) and k.obs_count == {}


def test_six_observation_tour():
    # reference example: 11 landmarks around one obstacle, six omnidirectional observations
    tour = [{2, 3, 4}, {4, 5, 6}, {6, 7, 8}, {8, 9, 10}, {11, 1, 2}, {10, 11}]
    k = SimplicialComplex()
    for obs in tour:
        k.insert(obs)
    assert len(k.c0) == 11
    assert k.c2 == {(2, 3, 4), (4, 5, 6), (6, 7, 8), (8, 9, 10), (1, 2, 11)}
    assert {(1, 2), (2, 3), (2, 4), (3, 4), (10, 11)} <= k.c1


def test_large_observation_truncated_at_triangles():
    k = SimplicialComplex()
    k.insert(range(5))
    assert len(k.c2) == 10 and len(k.c1) == 10 and len(k.c0) == 5


@given(observations)
@settings(max_examples=80, deadline=None)
def test_insert_matches_face_enumeration(obs):
    k = SimplicialComplex()
    expect = {1: set(), 2: set(), 3: set()}
    counts = Counter()
    sizes = []
    for o in obs:
        before = set(k.c2)
        new = k.insert(o)
        assert set(new) == k.c2 - before
        for d in (1, 2, 3):
            expect[d] |= set(combinations(sorted(o), d))
        counts.update(o)
        sizes.append(k.counts)
    assert k.c0 == expect[1] and k.c1 == expect[2] and k.c2 == expect[3]
    assert k.obs_count == dict(counts)
    assert k.is_closed()
    # the complex only grows
    for a, b in zip(sizes, sizes[1:]):
        assert all(x <= y for x, y in zip(a, b))


@given(observations)
@settings(max_examples=50, deadline=None)
def test_json_round_trip(obs):
    k = SimplicialComplex({0: True, 3: False})
    for o in obs:
        k.insert(o)
    text = cx.dumps(k)
    back = cx.loads(text)
    assert back == k
    assert cx.dumps(back) == text


def test_save_load(tmp_path):
    k = SimplicialComplex()
    k.insert([1, 2, 3])
    cx.save(k, tmp_path / "k.json")
    assert cx.load(tmp_path / "k.json") == k


def test_from_dict_rejects_malformed():
    d = {"c0": [[1]], "c1": [[2, 1]], "c2": [], "obs_count": {"1": 1}}
    with pytest.raises(ValueError):
        SimplicialComplex.from_dict(d)


def test_repeat_observation_only_counts():
    k = SimplicialComplex()
    k.insert([1, 2, 3])
    assert k.insert([3, 2, 1]) == []
    assert k.obs_count == {1: 2, 2: 2, 3: 2}


def test_snapshot_is_independent():
    k = SimplicialComplex()
    k.insert([1, 2])
    snap = k.snapshot()
    k.insert([1, 2, 3])
    assert snap.counts == (2, 1, 0) and k.counts == (3, 3, 1)


def test_one_skeleton_empty():
    assert one_skeleton(SimplicialComplex()) == {}


@given(observations)
@settings(max_examples=50, deadline=None)
def test_one_skeleton_degrees(obs):
    k = SimplicialComplex()
    for o in obs:
        k.insert(o)
    g = one_skeleton(k)
    assert set(g) == {v for (v,) in k.c0}
    assert sum(len(n) for n in g.values()) == 2 * len(k.c1)
    for v, nbrs in g.items():
        assert len(nbrs) == sum(1 for e in k.c1 if v in e)


def test_boundary_of_single_triangle():
    # oracle: d[a,b,c] = [b,c] - [a,c] + [a,b], d[u,v] = v - u
    k = SimplicialComplex()
    k.insert([4, 7, 9])
    b = boundary_matrices(k)
    assert b.vertex_index == [4, 7, 9]
    assert b.edge_index == [(4, 7), (4, 9), (7, 9)]
    np.testing.assert_array_equal(b.b1.toarray(), [[-1, -1, 0], [1, 0, -1], [0, 1, 1]])
    np.testing.assert_array_equal(b.b2.toarray().ravel(), [1, -1, 1])


@given(observations)
@settings(max_examples=80, deadline=None)
def test_boundary_columns_and_identity(obs):
    k = SimplicialComplex()
    for o in obs:
        k.insert(o)
    b = boundary_matrices(k)
    b1 = b.b1.toarray()
    b2 = b.b2.toarray()
    assert b1.shape == (len(k.c0), len(k.c1)) and b2.shape == (len(k.c1), len(k.c2))
    if b1.size:
        assert (np.sort(b1, axis=0)[0] == -1).all() and (np.sort(b1, axis=0)[-1] == 1).all()
        assert (np.abs(b1).sum(axis=0) == 2).all()
    if b2.size:
        assert (np.abs(b2).sum(axis=0) == 3).all()
    assert b1.dtype.kind == "i"
    assert not (b.b1 @ b.b2).toarray().any()
