"""Triangle-triangle intersection with filtered exact orientation predicates.

The float determinant is trusted when it clears a forward error bound;
otherwise the sign is recomputed in rational arithmetic, so the answer is
exact for the given double-precision vertices.
"""
from fractions import Fraction

import numpy as np

_EPS = 2.0 ** -53
_O3D_BOUND = (7.0 + 56.0 * _EPS) * _EPS
_O2D_BOUND = (3.0 + 16.0 * _EPS) * _EPS


def _exact_orient3d(a, b, c, d):
    a, b, c, d = ([Fraction(float(t)) for t in p] for p in (a, b, c, d))
    ad = [a[i] - d[i] for i in range(3)]
    bd = [b[i] - d[i] for i in range(3)]
    cd = [c[i] - d[i] for i in range(3)]
    det = (ad[0] * (bd[1] * cd[2] - bd[2] * cd[1])
           - ad[1] * (bd[0] * cd[2] - bd[2] * cd[0])
           + ad[2] * (bd[0] * cd[1] - bd[1] * cd[0]))
    return (det > 0) - (det < 0)


def orient3d(a, b, c, d) -> np.ndarray:
    """Sign of det[a-d, b-d, c-d] for stacked points; positive when d is below abc."""
    single = all(np.ndim(p) == 1 for p in (a, b, c, d))
    a, b, c, d = (np.atleast_2d(np.asarray(p, dtype=float)) for p in (a, b, c, d))
    ad, bd, cd = a - d, b - d, c - d
    m1 = bd[:, 1] * cd[:, 2] - bd[:, 2] * cd[:, 1]
    m2 = bd[:, 0] * cd[:, 2] - bd[:, 2] * cd[:, 0]
    m3 = bd[:, 0] * cd[:, 1] - bd[:, 1] * cd[:, 0]
    det = ad[:, 0] * m1 - ad[:, 1] * m2 + ad[:, 2] * m3
    perm = (np.abs(ad[:, 0]) * (np.abs(bd[:, 1] * cd[:, 2]) + np.abs(bd[:, 2] * cd[:, 1]))
            + np.abs(ad[:, 1]) * (np.abs(bd[:, 0] * cd[:, 2]) + np.abs(bd[:, 2] * cd[:, 0]))
            + np.abs(ad[:, 2]) * (np.abs(bd[:, 0] * cd[:, 1]) + np.abs(bd[:, 1] * cd[:, 0])))
    out = np.sign(det).astype(np.int64)
    unsure = np.flatnonzero(np.abs(det) <= _O3D_BOUND * perm)
    for i in unsure:
        out[i] = _exact_orient3d(a[i % len(a)], b[i % len(b)], c[i % len(c)], d[i % len(d)])
    return out[0] if single else out


def orient2d(a, b, c) -> np.ndarray:
    """Sign of the 2D cross product (a-c) x (b-c); positive when abc is counterclockwise."""
    single = all(np.ndim(p) == 1 for p in (a, b, c))
    a, b, c = (np.atleast_2d(np.asarray(p, dtype=float)) for p in (a, b, c))
    l = (a[:, 0] - c[:, 0]) * (b[:, 1] - c[:, 1])
    r = (a[:, 1] - c[:, 1]) * (b[:, 0] - c[:, 0])
    det = l - r
    out = np.sign(det).astype(np.int64)
    unsure = np.flatnonzero(np.abs(det) <= _O2D_BOUND * (np.abs(l) + np.abs(r)))
    for i in unsure:
        p, q, s = (tuple(Fraction(float(t)) for t in v[i % len(v)]) for v in (a, b, c))
        e = (p[0] - s[0]) * (q[1] - s[1]) - (p[1] - s[1]) * (q[0] - s[0])
        out[i] = (e > 0) - (e < 0)
    return out[0] if single else out


# --- narrow phase -------------------------------------------------------------


def _segment_meets_triangle(p, q, tri, op, oq):
    """Closed segment pq vs closed triangle, given its plane orientations op, oq."""
    crosses = (op * oq <= 0) & ~((op == 0) & (oq == 0))
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    s1 = orient3d(p, q, a, b)
    s2 = orient3d(p, q, b, c)
    s3 = orient3d(p, q, c, a)
    inside = ((s1 >= 0) & (s2 >= 0) & (s3 >= 0)) | ((s1 <= 0) & (s2 <= 0) & (s3 <= 0))
    return crosses & inside


def _coplanar_overlap(t1, t2):
    """Closed coplanar triangles overlap (checked one pair at a time)."""
    n = np.cross(t1[1] - t1[0], t1[2] - t1[0])
    drop = int(np.argmax(np.abs(n)))
    keep = [i for i in range(3) if i != drop]
    u, v = t1[:, keep], t2[:, keep]

    def seg_cross(p, q, r, s):
        d1 = orient2d(p, q, r)
        d2 = orient2d(p, q, s)
        d3 = orient2d(r, s, p)
        d4 = orient2d(r, s, q)
        if d1 * d2 < 0 and d3 * d4 < 0:
            return True

        def on(a, b, c, d):
            return d == 0 and min(a[0], b[0]) <= c[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])

        return on(p, q, r, d1) or on(p, q, s, d2) or on(r, s, p, d3) or on(r, s, q, d4)

    def inside(pt, tri):
        s = [orient2d(tri[i], tri[(i + 1) % 3], pt) for i in range(3)]
        return all(x >= 0 for x in s) or all(x <= 0 for x in s)

    for i in range(3):
        for j in range(3):
            if seg_cross(u[i], u[(i + 1) % 3], v[j], v[(j + 1) % 3]):
                return True
    return inside(u[0], v) or inside(v[0], u)


def triangles_intersect(T1, T2) -> np.ndarray:
    """Vectorized closed triangle-triangle intersection for (n, 3, 3) stacks."""
    T1 = np.asarray(T1, dtype=float).reshape(-1, 3, 3)
    T2 = np.asarray(T2, dtype=float).reshape(-1, 3, 3)
    o1 = np.stack([orient3d(T2[:, 0], T2[:, 1], T2[:, 2], T1[:, i]) for i in range(3)], axis=1)
    o2 = np.stack([orient3d(T1[:, 0], T1[:, 1], T1[:, 2], T2[:, i]) for i in range(3)], axis=1)
    separated = (np.all(o1 > 0, axis=1) | np.all(o1 < 0, axis=1)
                 | np.all(o2 > 0, axis=1) | np.all(o2 < 0, axis=1))
    coplanar = np.all(o1 == 0, axis=1)
    hit = np.zeros(len(T1), dtype=bool)
    todo = ~separated & ~coplanar
    if np.any(todo):
        idx = np.flatnonzero(todo)
        t1, t2, s1, s2 = T1[idx], T2[idx], o1[idx], o2[idx]
        acc = np.zeros(len(idx), dtype=bool)
        for i in range(3):
            j = (i + 1) % 3
            acc |= _segment_meets_triangle(t1[:, i], t1[:, j], t2, s1[:, i], s1[:, j])
            acc |= _segment_meets_triangle(t2[:, i], t2[:, j], t1, s2[:, i], s2[:, j])
        hit[idx] = acc
    for i in np.flatnonzero(coplanar & ~separated):
        hit[i] = _coplanar_overlap(T1[i], T2[i])
    return hit


# --- broad phase ----------------------------------------------------------------


class AABBTree:
    """Static bounding-box hierarchy over triangles, built once, read-only afterward."""

    LEAF_SIZE = 8

    def __init__(self, triangles):
        tris = np.asarray(triangles, dtype=float)
        self.lo = tris.min(axis=1)
        self.hi = tris.max(axis=1)
        cent = tris.mean(axis=1)
        self.order = np.arange(len(tris))
        self.node_lo, self.node_hi, self.children, self.ranges = [], [], [], []
        self._build(cent, 0, len(tris))
        self.node_lo = np.array(self.node_lo)
        self.node_hi = np.array(self.node_hi)

    def _build(self, cent, start, stop):
        node = len(self.children)
        ids = self.order[start:stop]
        self.node_lo.append(self.lo[ids].min(axis=0))
        self.node_hi.append(self.hi[ids].max(axis=0))
        self.children.append(None)
        self.ranges.append((start, stop))
        if stop - start > self.LEAF_SIZE:
            c = cent[ids]
            axis = int(np.argmax(np.ptp(c, axis=0)))
            sorted_ids = ids[np.argsort(c[:, axis], kind="stable")]
            self.order[start:stop] = sorted_ids
            mid = (start + stop) // 2
            left = self._build(cent, start, mid)
            right = self._build(cent, mid, stop)
            self.children[node] = (left, right)
        return node

    def _overlap(self, i, j):
        return bool(np.all(self.node_lo[i] <= self.node_hi[j]) and np.all(self.node_lo[j] <= self.node_hi[i]))

    def self_candidate_pairs(self) -> np.ndarray:
        """Face pairs (i < j) whose bounding boxes overlap."""
        leaf_pairs = []
        stack = [(0, 0)]
        while stack:
            i, j = stack.pop()
            if i != j and not self._overlap(i, j):
                continue
            ci, cj = self.children[i], self.children[j]
            if ci is None and cj is None:
                leaf_pairs.append((i, j))
            elif i == j:
                l, r = ci
                stack += [(l, l), (r, r), (l, r)]
            elif ci is not None and (cj is None or self._size(i) >= self._size(j)):
                stack += [(ci[0], j), (ci[1], j)]
            else:
                stack += [(i, cj[0]), (i, cj[1])]
        chunks = []
        for i, j in leaf_pairs:
            a = self.order[slice(*self.ranges[i])]
            b = self.order[slice(*self.ranges[j])]
            A, B = np.meshgrid(a, b, indexing="ij")
            chunks.append(np.stack([A.ravel(), B.ravel()], axis=1))
        if not chunks:
            return np.empty((0, 2), dtype=np.int64)
        pairs = np.concatenate(chunks)
        pairs = np.sort(pairs, axis=1)
        pairs = pairs[pairs[:, 0] < pairs[:, 1]]
        lo, hi = self.lo, self.hi
        keep = np.all(lo[pairs[:, 0]] <= hi[pairs[:, 1]], axis=1) & np.all(lo[pairs[:, 1]] <= hi[pairs[:, 0]], axis=1)
        return np.unique(pairs[keep], axis=0)

    def _size(self, node):
        s, e = self.ranges[node]
        return e - s


def mesh_self_intersections(vertices, faces) -> np.ndarray:
    """Pairs of faces without a common vertex whose closed triangles intersect."""
    vertices = np.asarray(vertices, dtype=float)
    faces = np.asarray(faces, dtype=np.int64)
    tris = vertices[faces]
    pairs = AABBTree(tris).self_candidate_pairs()
    if len(pairs) == 0:
        return pairs
    fa, fb = faces[pairs[:, 0]], faces[pairs[:, 1]]
    share = np.any(fa[:, :, None] == fb[:, None, :], axis=(1, 2))
    pairs = pairs[~share]
    if len(pairs) == 0:
        return pairs
    hit = triangles_intersect(tris[pairs[:, 0]], tris[pairs[:, 1]])
    return pairs[hit]
