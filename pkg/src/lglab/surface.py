"""Triangulated immersed spheres and their left/right invariant Gauss maps."""
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from .algebra import as_mat2
from .errors import (
    DegenerateFaceError,
    DegenerateGeometryError,
    MeshParseError,
    MeshValidationError,
    NonManifoldError,
    OrientationError,
    WrongTopologyError,
)
from .group import as_points, left_frame_matrix, multiply, right_frame_matrix

AREA_TOL = 1e-14  # relative to the squared bounding-box diagonal
DIFFEO_TOL = 1e-8
CONSTANT_GAUSS_TOL = 1e-12


@dataclass(eq=False)
class SphereMesh:
    """Closed oriented triangle mesh; counterclockwise faces point outward."""

    vertices: np.ndarray
    faces: np.ndarray
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(as_points(self.vertices), dtype=float)
        self.faces = np.ascontiguousarray(self.faces, dtype=np.int64)
        if self.vertices.ndim != 2 or self.faces.ndim != 2 or self.faces.shape[1] != 3:
            raise MeshValidationError("vertices must be (n, 3) and faces (m, 3)")
        if self.check:
            self.validate()

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    @cached_property
    def edges(self) -> np.ndarray:
        """Unique undirected edges, each as a sorted vertex pair."""
        return np.unique(np.sort(self._half_edges, axis=1), axis=0)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_faces

    @cached_property
    def _half_edges(self):
        f = self.faces
        return np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])

    def validate(self):
        f = self.faces
        n = self.n_vertices
        if f.size == 0:
            raise MeshValidationError("mesh has no faces")
        if f.min() < 0 or f.max() >= n:
            raise MeshValidationError("face index out of range")
        if np.any((f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 2] == f[:, 0])):
            raise DegenerateFaceError("face with a repeated vertex")
        if len(np.unique(f)) != n:
            raise MeshValidationError("mesh has unreferenced vertices")
        und, counts = np.unique(np.sort(self._half_edges, axis=1), axis=0, return_counts=True)
        if np.any(counts != 2):
            bad = und[counts != 2][0]
            c = counts[counts != 2][0]
            raise NonManifoldError(f"edge {tuple(int(v) for v in bad)} is used by {c} face(s)")
        _, dcounts = np.unique(self._half_edges, axis=0, return_counts=True)
        if np.any(dcounts != 1):
            raise OrientationError("adjacent faces are inconsistently oriented")
        self.vertex_links  # raises NonManifoldError on pinched vertices
        chi = self.euler_characteristic
        if chi != 2:
            raise WrongTopologyError(f"Euler characteristic {chi}, a sphere needs 2")
        diag = np.linalg.norm(np.ptp(self.vertices, axis=0))
        areas = self.face_areas
        if np.any(areas <= AREA_TOL * diag * diag):
            raise DegenerateFaceError(f"face {int(np.argmin(areas))} has (near) zero area")

    # --- geometry in coordinates ---------------------------------------------

    @cached_property
    def face_cross(self) -> np.ndarray:
        """Unnormalized face normals ``(v1 - v0) x (v2 - v0)``."""
        v = self.vertices[self.faces]
        return np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])

    @cached_property
    def face_areas(self) -> np.ndarray:
        return 0.5 * np.linalg.norm(self.face_cross, axis=1)

    @cached_property
    def mean_edge_length(self) -> float:
        e = self.edges
        return float(np.mean(np.linalg.norm(self.vertices[e[:, 0]] - self.vertices[e[:, 1]], axis=1)))

    @cached_property
    def area_weighted_normals(self) -> np.ndarray:
        """Per-vertex sum of incident face cross products (coordinates)."""
        return _area_weighted_normals(self.vertices, self.faces)

    # --- connectivity --------------------------------------------------------

    @cached_property
    def edge_faces(self) -> dict:
        """Map sorted edge -> the two incident face ids."""
        out = {}
        for fid, (a, b, c) in enumerate(self.faces.tolist()):
            for u, v in ((a, b), (b, c), (c, a)):
                out.setdefault((min(u, v), max(u, v)), []).append(fid)
        return out

    @cached_property
    def face_neighbors(self) -> np.ndarray:
        """(m, 3) array: face across edge (v0v1, v1v2, v2v0)."""
        lookup = {}
        for fid, (a, b, c) in enumerate(self.faces.tolist()):
            lookup[(a, b)] = fid
            lookup[(b, c)] = fid
            lookup[(c, a)] = fid
        nb = np.empty((self.n_faces, 3), dtype=np.int64)
        for fid, (a, b, c) in enumerate(self.faces.tolist()):
            nb[fid] = (lookup[(b, a)], lookup[(c, b)], lookup[(a, c)])
        return nb

    @cached_property
    def vertex_links(self) -> list:
        """Cyclically ordered (counterclockwise) one-ring of every vertex."""
        nxt = [dict() for _ in range(self.n_vertices)]
        for a, b, c in self.faces.tolist():
            nxt[a][b] = c
            nxt[b][c] = a
            nxt[c][a] = b
        links = []
        for v, succ in enumerate(nxt):
            start = next(iter(succ))
            ring = [start]
            cur = succ[start]
            while cur != start:
                ring.append(cur)
                cur = succ[cur]
                if len(ring) > len(succ):
                    break
            if len(ring) != len(succ):
                raise NonManifoldError(f"vertex {v} has a pinched neighborhood")
            links.append(np.array(ring, dtype=np.int64))
        return links

    # --- derived meshes ------------------------------------------------------

    def with_vertices(self, vertices) -> "SphereMesh":
        return SphereMesh(np.asarray(vertices, dtype=float), self.faces.copy(), check=False)

    def left_translated(self, A, a) -> "SphereMesh":
        """Image of the mesh under left translation by ``a``."""
        a = as_points(a)
        return self.with_vertices(multiply(A, np.broadcast_to(a, self.vertices.shape), self.vertices))

    def flipped(self) -> "SphereMesh":
        return SphereMesh(self.vertices.copy(), self.faces[:, ::-1].copy(), check=False)


def _area_weighted_normals(vertices, faces):
    v = vertices[faces]
    cross = np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
    out = np.zeros_like(vertices)
    for k in range(3):
        np.add.at(out, faces[:, k], cross)
    return out


# --- generators -------------------------------------------------------------

_ICO_FACES = [
    (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
    (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
    (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
    (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
]


def _unit_icosphere(level):
    t = (1.0 + np.sqrt(5.0)) / 2.0
    verts = [
        (-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
        (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
        (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1),
    ]
    verts = [np.array(v, dtype=float) / np.linalg.norm(v) for v in verts]
    faces = list(_ICO_FACES)
    for _ in range(level):
        cache = {}

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        refined = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            refined += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = refined
    return np.array(verts), np.array(faces, dtype=np.int64)


def make_round_sphere(center=(0.0, 0.0, 0.0), r=1.0, level=0) -> SphereMesh:
    """Icosphere of coordinate radius ``r`` about ``center`` with 20 * 4**level faces."""
    if not r > 0:
        raise ValueError("radius must be positive")
    if level < 0:
        raise ValueError("subdivision level must be nonnegative")
    unit, faces = _unit_icosphere(int(level))
    return SphereMesh(as_points(center) + r * unit, faces)


# Meridian of a capsule whose upper cap has been pushed down through the
# lower cap: (R, Z) from the inner pole, over the rolled lip, to the outer pole.
_CUP_PROFILE = np.array([
    (0.00, -1.60), (0.25, -1.55), (0.38, -1.35), (0.42, -1.00),
    (0.45, -0.30), (0.50, 0.40), (0.60, 0.85), (0.80, 1.00),
    (0.97, 0.80), (1.02, 0.20), (1.00, -0.40), (0.88, -0.85),
    (0.55, -1.05), (0.00, -1.12),
])


def _cup_meridian():
    pts = _CUP_PROFILE.copy()
    pts[:, 1] += 0.3
    # mirror across the axis so the periodic spline meets it at right angles
    full = np.concatenate([pts, pts[-2:0:-1] * (-1.0, 1.0), pts[:1]])
    seg = np.linalg.norm(np.diff(full, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    s *= 2.0 * np.pi / s[-1]
    # the mirrored half has the same length, so s == pi at the outer pole
    return CubicSpline(s, full, bc_type="periodic")


def make_self_intersecting_sphere(level=3, axis="z", size=0.2) -> SphereMesh:
    """Immersed sphere with a transversal self-intersection circle.

    A surface of revolution whose meridian runs from a pole below the bottom
    cap, up an inner tube, over a rolled lip and down the outer wall; the inner
    tube crosses the bottom cap. ``axis`` selects the symmetry axis.
    """
    if level < 2:
        raise ValueError("control mesh needs subdivision level >= 2")
    unit, faces = _unit_icosphere(int(level))
    spline = _cup_meridian()
    ax = {"x": 0, "y": 1, "z": 2}[axis]
    u_ax = unit[:, ax]
    t = np.arccos(np.clip(-u_ax, -1.0, 1.0))
    RZ = spline(t)
    sin_t = np.sin(t)
    dR = spline(t, 1)[:, 0]
    near_pole = sin_t < 1e-9
    ratio = np.where(near_pole, dR / np.where(near_pole, np.cos(t), 1.0), RZ[:, 0] / np.where(near_pole, 1.0, sin_t))
    perp = unit.copy()
    perp[:, ax] = 0.0
    verts = ratio[:, None] * perp
    verts[:, ax] = RZ[:, 1]
    return SphereMesh(size * verts, faces)


# --- normals and Gauss maps ---------------------------------------------------


def _matrix_of(model):
    # a classified model carries the matrix the mesh coordinates refer to
    return as_mat2(getattr(model, "input_matrix", model))


def _normalize_rows(v, mesh_ids=None):
    n = np.linalg.norm(v, axis=-1)
    bad = ~(n > 0)
    if np.any(bad):
        idx = int(np.flatnonzero(bad)[0])
        raise DegenerateGeometryError(idx if mesh_ids is None else mesh_ids[idx])
    return v / n[..., None]


def frame_normals(frames, coord_normals):
    """Unit normal in frame components from coordinate normals.

    With tangent vectors ``t1, t2`` and frame matrix ``P``, the frame
    components of the tangents are ``P^{-1} t_i`` and their cross product is
    ``det(P^{-1}) P^T (t1 x t2)``; ``det P > 0`` so normalizing ``P^T n``
    gives the oriented metric-unit normal directly.
    """
    return _normalize_rows(np.einsum("...ji,...j->...i", frames, coord_normals))


def vertex_normals(model, mesh: SphereMesh) -> np.ndarray:
    """Unit normals of every vertex, in left-frame components."""
    A = _matrix_of(model)
    P = left_frame_matrix(A, mesh.vertices[:, 2])
    n = _normalize_rows(mesh.area_weighted_normals)
    return frame_normals(P, n)


def vertex_normal(model, mesh: SphereMesh, v: int) -> np.ndarray:
    A = _matrix_of(model)
    n = mesh.area_weighted_normals[v]
    norm = np.linalg.norm(n)
    if not norm > 0:
        raise DegenerateGeometryError(v)
    P = left_frame_matrix(A, mesh.vertices[v, 2])
    return frame_normals(P, n / norm)


@dataclass
class GaussData:
    normals: np.ndarray  # coordinate components of the metric-unit normal
    gauss: np.ndarray  # unit vectors in T_eX (orthonormal frame components)
    face_signs: np.ndarray
    spherical_areas: np.ndarray  # signed area of each face's Gauss image
    degree: int
    min_abs_jacobian: float
    kind: str = "left"


def spherical_triangle_areas(g0, g1, g2) -> np.ndarray:
    """Signed solid angle of the spherical triangles (g0, g1, g2)."""
    num = np.einsum("ij,ij->i", g0, np.cross(g1, g2))
    den = 1.0 + np.einsum("ij,ij->i", g0, g1) + np.einsum("ij,ij->i", g1, g2) + np.einsum("ij,ij->i", g2, g0)
    return 2.0 * np.arctan2(num, den)


def _gauss_data(mesh, frames, kind):
    n = _normalize_rows(mesh.area_weighted_normals)
    G = frame_normals(frames, n)
    coord = np.einsum("...ij,...j->...i", frames, G)
    f = mesh.faces
    omega = spherical_triangle_areas(G[f[:, 0]], G[f[:, 1]], G[f[:, 2]])
    degree = int(np.rint(omega.sum() / (4.0 * np.pi)))
    return GaussData(
        normals=coord,
        gauss=G,
        face_signs=np.sign(omega).astype(np.int64),
        spherical_areas=omega,
        degree=degree,
        min_abs_jacobian=float(np.min(np.abs(omega) / mesh.face_areas)),
        kind=kind,
    )


def left_gauss_map(model, mesh: SphereMesh, frame_scale=None) -> GaussData:
    """Left invariant Gauss map sampled at the vertices.

    ``frame_scale`` switches to the left invariant metric in which
    ``{l_1 E1, l_2 E2, l_3 E3}`` is orthonormal.
    """
    A = _matrix_of(model)
    P = left_frame_matrix(A, mesh.vertices[:, 2])
    if frame_scale is not None:
        P = P * np.asarray(frame_scale, dtype=float)[None, None, :]
    return _gauss_data(mesh, P, "left")


def right_gauss_map(model, mesh: SphereMesh) -> GaussData:
    """Right invariant Gauss map; the right frame is orthonormal at e."""
    A = _matrix_of(model)
    return _gauss_data(mesh, right_frame_matrix(A, mesh.vertices), "right")


@dataclass
class DiffeoCheck:
    ok: bool
    reasons: list
    offending_faces: np.ndarray

    def __bool__(self):
        return self.ok


def is_gauss_diffeo(gd: GaussData, tol: float = DIFFEO_TOL) -> DiffeoCheck:
    """Constant Jacobian sign, Jacobian bounded away from zero, and degree +-1."""
    signs = gd.face_signs
    reasons = []
    majority = 1 if np.sum(signs > 0) >= np.sum(signs < 0) else -1
    offending = np.flatnonzero(signs != majority)
    if offending.size:
        reasons.append(f"{offending.size} face(s) with Jacobian sign != {majority:+d}")
    if not gd.min_abs_jacobian > tol:
        reasons.append(f"min |Jacobian| {gd.min_abs_jacobian:.3g} <= {tol:g}")
    if abs(gd.degree) != 1:
        reasons.append(f"degree {gd.degree}")
    return DiffeoCheck(not reasons, reasons, offending)


def gauss_values(model, vertices, faces) -> np.ndarray:
    """Left Gauss values for an arbitrary (possibly open) triangle patch."""
    vertices = as_points(vertices)
    faces = np.asarray(faces, dtype=np.int64)
    n = _normalize_rows(_area_weighted_normals(vertices, faces))
    P = left_frame_matrix(_matrix_of(model), vertices[:, 2])
    return frame_normals(P, n)


def gauss_is_constant(values, tol: float = CONSTANT_GAUSS_TOL) -> bool:
    """True when the Gauss values have total variance below ``tol``."""
    values = np.asarray(values, dtype=float)
    return bool(np.sum(np.var(values, axis=0)) < tol)


# --- OBJ ----------------------------------------------------------------------


def mesh_to_obj(mesh: SphereMesh) -> str:
    """OBJ text; floats use repr so a reload is bit-exact."""
    lines = [f"v {x!r} {y!r} {z!r}" for x, y, z in mesh.vertices.tolist()]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.faces.tolist()]
    return "\n".join(lines) + "\n"


def save_mesh(mesh: SphereMesh, path):
    Path(path).write_text(mesh_to_obj(mesh))


def load_mesh(path) -> SphereMesh:
    """Read the ``v x y z`` / ``f i j k`` subset of Wavefront OBJ and validate it."""
    verts, faces = [], []
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tag, *rest = line.split()
        try:
            if tag == "v":
                if len(rest) != 3:
                    raise ValueError("vertex needs 3 coordinates")
                xyz = [float(t) for t in rest]
                if not all(np.isfinite(xyz)):
                    raise ValueError("non-finite coordinate")
                verts.append(xyz)
            elif tag == "f":
                if len(rest) != 3:
                    raise ValueError("only triangular faces are supported")
                idx = [int(t) for t in rest]
                if min(idx) < 1:
                    raise ValueError("indices are 1-based and positive")
                faces.append([i - 1 for i in idx])
            else:
                raise ValueError(f"unsupported directive '{tag}'")
        except ValueError as exc:
            raise MeshParseError(f"{path}:{lineno}: {exc}") from None
    if not verts or not faces:
        raise MeshParseError(f"{path}: no vertices or faces")
    if max(max(f) for f in faces) >= len(verts):
        raise MeshParseError(f"{path}: face index out of range")
    return SphereMesh(np.array(verts), np.array(faces))
