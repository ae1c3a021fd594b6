import itertools
from fractions import Fraction

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from lglab import self_intersections
from lglab.intersect import AABBTree, mesh_self_intersections, orient2d, orient3d, triangles_intersect
from lglab.surface import make_round_sphere, make_self_intersecting_sphere

small = st.floats(-4, 4, allow_nan=False, width=64)
pt3 = st.tuples(small, small, small)


def exact_orient3d(a, b, c, d):
    m = [[Fraction(x) - Fraction(y) for x, y in zip(p, d)] for p in (a, b, c)]
    det = (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )
    return (det > 0) - (det < 0)


def test_orient3d_examples():
    a, b, c = [0, 0, 0], [1, 0, 0], [0, 1, 0]
    assert orient3d(a, b, c, [0, 0, 1]) == -orient3d(a, b, c, [0, 0, -1])
    assert orient3d(a, b, c, [0.3, 0.3, 0.0]) == 0
    assert abs(int(orient3d(a, b, c, [0, 0, 1]))) == 1


def test_orient3d_nearly_coplanar_is_exact():
    # a point displaced from a plane by far less than the rounding of a naive determinant
    a, b, c = [0.1, 0.2, 0.3], [1.7, 0.4, 0.9], [0.5, 1.3, 0.2]
    n = np.cross(np.subtract(b, a), np.subtract(c, a))
    base = np.add(a, [0.35, 0.25, 0.0])
    base[2] = a[2] - (n[0] * (base[0] - a[0]) + n[1] * (base[1] - a[1])) / n[2]
    for k in range(-3, 4):
        d = base.copy()
        d[2] = np.nextafter(d[2], np.inf) if k > 0 else d[2]
        d[2] += k * 1e-17
        assert int(orient3d(a, b, c, d)) == exact_orient3d(a, b, c, d)


@settings(max_examples=300, deadline=None)
@given(pt3, pt3, pt3, pt3)
def test_orient3d_matches_rational_arithmetic(a, b, c, d):
    assert int(orient3d(a, b, c, d)) == exact_orient3d(a, b, c, d)


@settings(max_examples=200, deadline=None)
@given(st.integers(-8, 8), st.integers(-8, 8), st.integers(-2, 2))
def test_orient3d_on_integer_lattice_planes(x, y, w):
    # points on the plane z = x + 2y are exactly coplanar; w shifts off it
    a, b, c = [0, 0, 0], [1, 0, 1], [0, 1, 2]
    d = [x, y, x + 2 * y + w]
    assert int(orient3d(a, b, c, d)) == exact_orient3d(a, b, c, d)


def test_orient2d_examples():
    assert orient2d([0, 0], [1, 0], [0, 1]) == 1
    assert orient2d([0, 0], [1, 0], [0, -1]) == -1
    assert orient2d([0, 0], [1, 1], [3, 3]) == 0


def tri(*pts):
    return np.array(pts, dtype=float)


def test_triangles_intersect_cases():
    T = tri([0, 0, 0], [1, 0, 0], [0, 1, 0])
    assert triangles_intersect(T, tri([0.2, 0.2, -1], [0.2, 0.2, 1], [0.8, 0.8, 1]))  # piercing
    assert not triangles_intersect(T, tri([0, 0, 1], [1, 0, 1], [0, 1, 1]))  # parallel
    assert triangles_intersect(T, tri([0.1, 0.1, 0], [2, 0.1, 0], [0.1, 2, 0]))  # coplanar overlap
    assert not triangles_intersect(T, tri([2, 2, 0], [3, 2, 0], [2, 3, 0]))  # coplanar apart
    assert triangles_intersect(T, tri([0.5, 0.5, 0], [0.5, 0.5, 1], [0.8, 0.8, 1]))  # touching at a point
    assert triangles_intersect(T, tri([0.2, 0.2, 0.0], [5, 5, 5], [5, -5, 5]))  # vertex on face


def test_triangles_intersect_is_symmetric(rng):
    for _ in range(300):
        T1, T2 = rng.uniform(-1, 1, (2, 3, 3))
        assert bool(triangles_intersect(T1, T2)) == bool(triangles_intersect(T2, T1))


def brute_force_pairs(V, F):
    i, j = np.triu_indices(len(F), 1)
    shared = (F[i][:, :, None] == F[j][:, None, :]).any(axis=(1, 2))
    i, j = i[~shared], j[~shared]
    hit = triangles_intersect(V[F[i]], V[F[j]])
    return list(zip(i[hit].tolist(), j[hit].tolist()))


def test_round_sphere_has_no_self_intersections():
    assert self_intersections(make_round_sphere((0.1, 0.2, 0.3), 0.2, 3)) == []


def test_control_mesh_matches_brute_force():
    mesh = make_self_intersecting_sphere(2)
    fast = sorted(self_intersections(mesh))
    assert fast
    assert fast == brute_force_pairs(mesh.vertices, mesh.faces)


def test_control_mesh_self_intersects(control_mesh):
    assert len(self_intersections(control_mesh)) >= 1


def test_adjacent_faces_are_excluded():
    # a folded hinge: two faces sharing an edge intersect along it, yet are not reported
    V = np.array([[0, 0, 0], [1, 0, 0], [0.5, 1, 0], [0.5, 1, 0.0001]], dtype=float)
    F = np.array([[0, 1, 2], [1, 0, 3]])
    assert triangles_intersect(V[F[0]], V[F[1]])
    assert len(mesh_self_intersections(V, F)) == 0


def test_aabb_candidates_cover_all_intersecting_pairs(rng):
    tris = rng.uniform(0, 1, (60, 1, 3)) + rng.uniform(-0.1, 0.1, (60, 3, 3))
    pairs = {tuple(p) for p in AABBTree(tris).self_candidate_pairs().tolist()}
    lo, hi = tris.min(axis=1), tris.max(axis=1)
    for i, j in itertools.combinations(range(60), 2):
        if np.all(lo[i] <= hi[j]) and np.all(lo[j] <= hi[i]):
            assert (i, j) in pairs
