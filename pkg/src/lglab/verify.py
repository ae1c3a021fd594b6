"""Embeddedness checks for triangulated spheres in open-book models.

Every routine that needs a generic configuration (no vertex exactly at a
sampled height, no fiber through a mesh edge) perturbs the offending input by
at most ``JITTER`` using a caller-supplied generator and retries; after
``max_retries`` failures it raises ResampleError.
"""
import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import DegenerateHeightError, ResampleError, SingularPointError, UnsupportedGroupError
from .group import LieGroupModel, classify
from .intersect import mesh_self_intersections
from .openbook import Fiber, angular_field_at, make_open_book
from .surface import SphereMesh, is_gauss_diffeo, left_gauss_map

JITTER = 1e-6
EPS_TAN = 1e-6
MAX_RETRIES = 8


def _rng(rng):
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


# --- PL Morse theory of the height function -----------------------------------


@dataclass
class CriticalPoint:
    vertex: int
    index: int
    z: float
    multiplicity: int = 1


@dataclass
class CriticalSet:
    points: list
    z0: float
    z1: float
    p0: np.ndarray
    p1: np.ndarray
    jittered: bool = False

    @property
    def count(self) -> int:
        return len(self.points)

    @property
    def indices(self) -> list:
        return sorted(p.index for p in self.points)

    def counts_by_index(self) -> dict:
        out = {0: 0, 1: 0, 2: 0}
        for p in self.points:
            out[p.index] += p.multiplicity
        return out


def _link_critical_points(links, h):
    points = []
    for v, ring in enumerate(links):
        up = h[ring] > h[v]
        changes = int(np.count_nonzero(up != np.roll(up, 1)))
        if changes == 0:
            points.append(CriticalPoint(v, 0 if up[0] else 2, float(h[v])))
        elif changes >= 4:
            points.append(CriticalPoint(v, 1, float(h[v]), changes // 2 - 1))
    return points


def critical_points_of_height(mesh: SphereMesh, rng=0, max_retries=MAX_RETRIES) -> CriticalSet:
    """Critical vertices of the height ``z`` by link sign alternation.

    Heights tied along an edge are perturbed (only at the tied vertices).
    """
    rng = _rng(rng)
    z = mesh.vertices[:, 2]
    h = z.copy()
    e = mesh.edges
    jittered = False
    for _ in range(max_retries + 1):
        tied = h[e[:, 0]] == h[e[:, 1]]
        if not np.any(tied):
            break
        ids = np.unique(e[tied])
        h[ids] += rng.uniform(-JITTER, JITTER, len(ids))
        jittered = True
    else:
        raise DegenerateHeightError("tied vertex heights persist after jitter budget")
    points = _link_critical_points(mesh.vertex_links, h)
    lo, hi = int(np.argmin(h)), int(np.argmax(h))
    return CriticalSet(points, float(z[lo]), float(z[hi]), mesh.vertices[lo].copy(),
                       mesh.vertices[hi].copy(), jittered)


# --- level sets -----------------------------------------------------------------


@dataclass
class LevelCurveSet:
    z: float
    polylines: list = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.polylines)


def _edge_ids(mesh):
    """Index of each face edge (v0v1, v1v2, v2v0) into ``mesh.edges``."""
    n = mesh.n_vertices
    keys = mesh.edges[:, 0] * n + mesh.edges[:, 1]
    f = mesh.faces
    pairs = np.stack([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]], axis=1)
    fk = pairs.min(axis=2) * n + pairs.max(axis=2)
    return np.searchsorted(keys, fk)


def level_curves(mesh: SphereMesh, z: float, rng=0, max_retries=MAX_RETRIES) -> LevelCurveSet:
    """Closed loops of ``mesh`` cut by the plane at height ``z`` (marching triangles)."""
    rng = _rng(rng)
    h = mesh.vertices[:, 2]
    zz = float(z)
    for _ in range(max_retries + 1):
        if not np.any(h == zz):
            break
        zz = float(z) + rng.uniform(-JITTER, JITTER)
    else:
        raise ResampleError(f"height {z} keeps landing on a vertex")
    above = h > zz
    e = mesh.edges
    crossing = above[e[:, 0]] != above[e[:, 1]]
    if not np.any(crossing):
        return LevelCurveSet(float(z))
    fe = _edge_ids(mesh)
    fc = crossing[fe]
    faces2 = np.flatnonzero(fc.sum(axis=1) == 2)
    nbrs = {}
    for fid in faces2:
        a, b = fe[fid][fc[fid]]
        nbrs.setdefault(a, []).append(b)
        nbrs.setdefault(b, []).append(a)
    hu, hv = h[e[:, 0]], h[e[:, 1]]
    t = (zz - hu) / np.where(crossing, hv - hu, 1.0)
    pts = mesh.vertices[e[:, 0]] + t[:, None] * (mesh.vertices[e[:, 1]] - mesh.vertices[e[:, 0]])
    pts[:, 2] = zz
    seen = set()
    loops = []
    for start in sorted(nbrs):
        if start in seen:
            continue
        loop = [start]
        seen.add(start)
        prev, cur = start, nbrs[start][0]
        while cur != start:
            loop.append(cur)
            seen.add(cur)
            a, b = nbrs[cur]
            prev, cur = cur, (b if a == prev else a)
        loops.append(pts[loop])
    return LevelCurveSet(float(z), loops)


# --- fibers of the quotient map ----------------------------------------------------


@dataclass
class FiberHit:
    x: float
    face: int
    transversal: bool


@dataclass
class FiberHits:
    fiber: Fiber
    hits: list
    jittered: bool = False

    @property
    def count(self):
        return len(self.hits)


class _Sections:
    """Per-mesh data for intersecting coordinate lines ``{(t, y, z)}``."""

    def __init__(self, mesh):
        self.mesh = mesh
        self.fe = _edge_ids(mesh)
        n = mesh.face_cross
        self.transversal = np.abs(n[:, 0]) > np.sin(EPS_TAN) * np.linalg.norm(n, axis=1)

    def row(self, z, ys):
        """Hits on the fibers ``(y, z)`` for ``y`` in ``ys``; None if degenerate."""
        V = self.mesh.vertices
        h = V[:, 2]
        if np.any(h == z):
            return None
        e = self.mesh.edges
        above = h > z
        crossing = above[e[:, 0]] != above[e[:, 1]]
        fc = crossing[self.fe]
        faces = np.flatnonzero(fc.sum(axis=1) == 2)
        out = [[] for _ in ys]
        if faces.size == 0:
            return out
        u, v = V[e[:, 0]], V[e[:, 1]]
        t = (z - u[:, 2]) / np.where(crossing, v[:, 2] - u[:, 2], 1.0)
        py = u[:, 1] + t * (v[:, 1] - u[:, 1])
        px = u[:, 0] + t * (v[:, 0] - u[:, 0])
        ends = self.fe[faces][fc[faces]].reshape(-1, 2)
        ya, yb = py[ends[:, 0]], py[ends[:, 1]]
        xa, xb = px[ends[:, 0]], px[ends[:, 1]]
        ys = np.asarray(ys, dtype=float)
        if np.any(np.isin(ys, py[crossing])):
            return None
        lo, hi = np.minimum(ya, yb), np.maximum(ya, yb)
        inside = (lo[:, None] < ys[None, :]) & (ys[None, :] < hi[:, None])
        for k, j in zip(*np.nonzero(inside)):
            s = (ys[j] - ya[k]) / (yb[k] - ya[k])
            fid = int(faces[k])
            out[j].append(FiberHit(float(xa[k] + s * (xb[k] - xa[k])), fid, bool(self.transversal[fid])))
        for hits in out:
            hits.sort(key=lambda hit: hit.x)
        return out


def _row_with_retries(sections, z, ys, rng, max_retries):
    zz, yy = float(z), np.asarray(ys, dtype=float)
    for attempt in range(max_retries + 1):
        res = sections.row(zz, yy)
        if res is not None:
            return res, zz, yy, attempt > 0
        zz = float(z) + rng.uniform(-JITTER, JITTER)
        yy = np.asarray(ys, dtype=float) + rng.uniform(-JITTER, JITTER, len(yy))
    raise ResampleError(f"fibers at z={z} keep meeting mesh edges")


def fiber_hits(mesh: SphereMesh, fiber, rng=0, max_retries=MAX_RETRIES, _sections=None) -> FiberHits:
    """Intersections of the line ``{(t, y, z)}`` with the mesh, sorted by ``t``."""
    if not isinstance(fiber, Fiber):
        fiber = Fiber(*map(float, fiber))
    sections = _sections or _Sections(mesh)
    res, zz, yy, jit = _row_with_retries(sections, fiber.z, [fiber.y], _rng(rng), max_retries)
    return FiberHits(Fiber(float(yy[0]), zz), res[0], jit)


@dataclass
class FiberGrid:
    ys: np.ndarray
    zs: np.ndarray
    hits: list  # hits[i][j] for zs[i], ys[j]
    interior: np.ndarray  # bool (len(zs), len(ys))

    @property
    def counts(self) -> np.ndarray:
        return np.array([[len(h) for h in row] for row in self.hits], dtype=np.int64)


def _segment_distances(points, a, b):
    """Distance from each point to the nearest segment [a_k, b_k] (2D)."""
    if len(a) == 0:
        return np.full(len(points), np.inf)
    d = b - a
    L2 = np.maximum(np.einsum("ij,ij->i", d, d), 1e-300)
    out = np.full(len(points), np.inf)
    for s in range(0, len(points), 512):
        p = points[s:s + 512, None, :]
        t = np.clip(np.einsum("pkj,kj->pk", p - a[None], d) / L2, 0.0, 1.0)
        proj = a[None] + t[..., None] * d[None]
        out[s:s + 512] = np.min(np.linalg.norm(p - proj, axis=2), axis=1)
    return out


def silhouette_edges(mesh: SphereMesh) -> np.ndarray:
    """Edges where the x-component of the face normal changes sign."""
    nx = mesh.face_cross[:, 0]
    pairs = np.array([mesh.edge_faces[tuple(e)] for e in mesh.edges.tolist()])
    sil = np.sign(nx[pairs[:, 0]]) != np.sign(nx[pairs[:, 1]])
    return mesh.edges[sil]


def sample_fibers(mesh: SphereMesh, grid=64, rng=0, max_retries=MAX_RETRIES) -> FiberGrid:
    """Fiber hits on a ``grid x grid`` lattice of cell centers over the bounding box of the projection."""
    rng = _rng(rng)
    yz = mesh.vertices[:, 1:]
    lo, hi = yz.min(axis=0), yz.max(axis=0)
    centers = (np.arange(grid) + 0.5) / grid
    ys = lo[0] + centers * (hi[0] - lo[0])
    zs = lo[1] + centers * (hi[1] - lo[1])
    sections = _Sections(mesh)
    hits = []
    for z in zs:
        res, *_ = _row_with_retries(sections, z, ys, rng, max_retries)
        hits.append(res)
    sil = silhouette_edges(mesh)
    Y, Z = np.meshgrid(ys, zs)
    pts = np.stack([Y.ravel(), Z.ravel()], axis=1)
    dist = _segment_distances(pts, yz[sil[:, 0]], yz[sil[:, 1]]).reshape(Y.shape)
    counts = np.array([[len(h) for h in row] for row in hits])
    interior = (dist >= 2.0 * mesh.mean_edge_length) & (counts > 0)
    return FiberGrid(ys, zs, hits, interior)


@dataclass
class BigraphResult:
    ok: bool
    sheet_sizes: list
    sheets_connected: list
    interior_fibers: int
    violations: int
    vacuous: bool = False


def _face_set_components(mesh, mask):
    ids = np.flatnonzero(mask)
    if ids.size == 0:
        return 0
    pos = -np.ones(mesh.n_faces, dtype=np.int64)
    pos[ids] = np.arange(ids.size)
    nb = mesh.face_neighbors[ids]
    src = np.repeat(np.arange(ids.size), 3)
    dst = pos[nb.ravel()]
    keep = dst >= 0
    g = coo_matrix((np.ones(keep.sum()), (src[keep], dst[keep])), shape=(ids.size, ids.size))
    return int(connected_components(g, directed=False)[0])


def bigraph_check(mesh: SphereMesh, samples=64, rng=0, fibers: FiberGrid = None, vacuous=False) -> BigraphResult:
    """Two-sheet structure over the interior of the projection.

    Sheet C1 holds the faces whose normal has negative x-component, C2 the
    rest; every interior fiber must hit C1 then C2, once each.
    """
    fibers = fibers or sample_fibers(mesh, samples, rng)
    nx = mesh.face_cross[:, 0]
    c1, c2 = nx < 0, nx > 0
    violations = 0
    for i, j in zip(*np.nonzero(fibers.interior)):
        hs = fibers.hits[i][j]
        if len(hs) != 2 or not (c1[hs[0].face] and c2[hs[1].face]) or not all(h.transversal for h in hs):
            violations += 1
    comps = [_face_set_components(mesh, c1), _face_set_components(mesh, c2)]
    connected = [c == 1 for c in comps]
    return BigraphResult(
        ok=violations == 0 and all(connected),
        sheet_sizes=[int(c1.sum()), int(c2.sum())],
        sheets_connected=connected,
        interior_fibers=int(fibers.interior.sum()),
        violations=violations,
        vacuous=vacuous,
    )


# --- Poincare-Hopf ------------------------------------------------------------------


def _rotate_onto(v, a, b):
    """Apply the minimal rotation taking unit ``a`` to unit ``b`` to ``v`` (row-wise)."""
    k = np.cross(a, b)
    c = np.einsum("...j,...j->...", a, b)
    kv = np.cross(k, v)
    return v + kv + np.cross(k, kv) / (1.0 + c)[..., None]


def _face_windings(mesh, center):
    """Winding number of the tangential angular field around each face.

    The field is projected onto each vertex tangent plane. Each edge gets one
    rotation angle, measured after carrying both endpoint vectors into the
    plane normal to the mean of the two vertex normals, and both incident
    faces reuse it with opposite signs. A face's angle sum is then 2*pi times
    its winding plus a small holonomy term, which rounding removes.
    Returns None for configurations that need a perturbation.
    """
    V = mesh.vertices
    X = angular_field_at(V, center)
    N = mesh.area_weighted_normals
    N = N / np.linalg.norm(N, axis=1)[:, None]
    XT = X - np.einsum("ij,ij->i", X, N)[:, None] * N
    if np.any(np.linalg.norm(XT, axis=1) < 1e-9):
        return None
    E = mesh.edges
    Nu, Nv = N[E[:, 0]], N[E[:, 1]]
    m = Nu + Nv
    mn = np.linalg.norm(m, axis=1)
    if np.any(mn < 1e-6):
        return None
    m /= mn[:, None]
    a = _rotate_onto(XT[E[:, 0]], Nu, m)
    b = _rotate_onto(XT[E[:, 1]], Nv, m)
    ang = np.arctan2(np.einsum("ij,ij->i", m, np.cross(a, b)), np.einsum("ij,ij->i", a, b))
    fe = _edge_ids(mesh)
    forward = E[fe, 0] == mesh.faces
    total = np.where(forward, ang[fe], -ang[fe]).sum(axis=1)
    w = np.rint(total / (2.0 * np.pi))
    if np.any(np.abs(total - 2.0 * np.pi * w) > 0.5 * np.pi):
        return None
    return w.astype(np.int64)


def poincare_hopf_zeros(mesh: SphereMesh, central_fiber, rng=0, max_retries=MAX_RETRIES):
    """Faces where the tangential angular field winds, with their indices."""
    rng = _rng(rng)
    c0 = np.array(central_fiber.center if isinstance(central_fiber, Fiber) else central_fiber, dtype=float)
    c = c0.copy()
    for _ in range(max_retries + 1):
        try:
            w = _face_windings(mesh, c)
        except SingularPointError:
            w = None
        if w is not None:
            nz = np.flatnonzero(w)
            return [(int(f), int(w[f])) for f in nz]
        c = c0 + rng.uniform(-JITTER, JITTER, 2)
    raise ResampleError("angular field keeps vanishing on a mesh edge")


def poincare_hopf_index_sum(mesh: SphereMesh, central_fiber, rng=0, max_retries=MAX_RETRIES) -> int:
    return sum(i for _, i in poincare_hopf_zeros(mesh, central_fiber, rng, max_retries))


def central_fiber(mesh: SphereMesh) -> Fiber:
    """Fiber near the middle of the projection, nudged off mesh symmetry lines."""
    yz = mesh.vertices[:, 1:]
    span = float(np.max(np.ptp(yz, axis=0)))
    y, z = yz.mean(axis=0) + span * np.array([3.17e-4, 2.29e-4])
    return Fiber(float(y), float(z))


# --- report ---------------------------------------------------------------------------


@dataclass
class VerifyConfig:
    z_samples: int = 32
    fiber_grid: int = 64
    tol: float = 1e-8
    seed: int = 0
    max_retries: int = MAX_RETRIES


@dataclass
class VerificationReport:
    group: dict
    gauss: dict
    self_intersections: list
    verdict: str
    seed: int
    config: dict
    morse: dict = None
    level_curves: list = None
    fibers: dict = None
    bigraph: dict = None
    poincare_hopf: int = None
    skipped: str = None
    consistency: dict = None

    EMBEDDED = "Embedded"
    NOT_EMBEDDED = "NotEmbedded"
    INCONCLUSIVE = "Inconclusive"

    @property
    def consistent(self) -> bool:
        return self.consistency["ok"]

    def to_dict(self) -> dict:
        return {
            "group": self.group,
            "gauss": self.gauss,
            "morse": self.morse,
            "levelCurves": self.level_curves,
            "fibers": self.fibers,
            "bigraph": self.bigraph,
            "selfIntersections": self.self_intersections,
            "poincareHopf": self.poincare_hopf,
            "verdict": self.verdict,
            "seed": self.seed,
            "config": self.config,
            "skipped": self.skipped,
            "consistency": self.consistency,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def _histogram(values):
    vals, counts = np.unique(np.asarray(values, dtype=np.int64), return_counts=True)
    return {str(int(v)): int(c) for v, c in zip(vals, counts)}


def _open_book_checks(mesh, config, rng):
    crit = critical_points_of_height(mesh, rng, config.max_retries)
    h = mesh.mean_edge_length
    z0, z1 = crit.z0, crit.z1
    band = 2.0 * h if z1 - z0 > 4.0 * h else 0.0
    zs = np.linspace(z0 + band, z1 - band, config.z_samples + (0 if band else 2))
    if not band:
        zs = zs[1:-1]
    levels = [level_curves(mesh, z, rng, config.max_retries) for z in zs]
    grid = sample_fibers(mesh, config.fiber_grid, rng, config.max_retries)
    counts = grid.counts
    two = counts == 2
    non_transversal = sum(
        1 for i, j in zip(*np.nonzero(two)) if not all(hit.transversal for hit in grid.hits[i][j])
    )
    ph_zeros = poincare_hopf_zeros(mesh, central_fiber(mesh), rng, config.max_retries)
    return {
        "morse": {
            "count": crit.count,
            "indices": crit.indices,
            "z0": crit.z0,
            "z1": crit.z1,
            "p0": crit.p0.tolist(),
            "p1": crit.p1.tolist(),
        },
        "levelCurves": [{"z": float(lc.z), "components": lc.count} for lc in levels],
        "fibers": {
            "grid": config.fiber_grid,
            "maxHits": int(counts.max()),
            "histogram": _histogram(counts.ravel()),
            "interiorHistogram": _histogram(counts[grid.interior]),
            "twoHitNonTransversal": int(non_transversal),
        },
        "grid": grid,
        "poincareHopf": int(sum(i for _, i in ph_zeros)),
        "poincareHopfZeros": ph_zeros,
    }


def full_report(model, mesh: SphereMesh, config: VerifyConfig = None) -> VerificationReport:
    """Gauss-map hypothesis, open-book conclusions and embeddedness for one mesh."""
    config = config or VerifyConfig()
    if not isinstance(model, LieGroupModel):
        model = classify(model)
    rng = np.random.default_rng(config.seed)
    gd = left_gauss_map(model, mesh)
    diffeo = is_gauss_diffeo(gd, config.tol)
    pairs = mesh_self_intersections(mesh.vertices, mesh.faces)
    report = VerificationReport(
        group=model.to_dict(),
        gauss={
            "degree": gd.degree,
            "minAbsJacobian": gd.min_abs_jacobian,
            "diffeo": diffeo.ok,
            "offendingFaces": int(diffeo.offending_faces.size),
        },
        self_intersections=[[int(a), int(b)] for a, b in pairs],
        verdict=VerificationReport.EMBEDDED if len(pairs) == 0 else VerificationReport.NOT_EMBEDDED,
        seed=config.seed,
        config=asdict(config),
    )
    checks = {}
    try:
        book = make_open_book(model)
    except UnsupportedGroupError as exc:
        report.skipped = str(exc)
        book = None
    if book is not None:
        local = mesh.with_vertices(book.to_model_coords(mesh.vertices))
        try:
            ob = _open_book_checks(local, config, rng)
        except ResampleError as exc:
            report.skipped = f"open-book checks inconclusive: {exc}"
            report.verdict = VerificationReport.INCONCLUSIVE
            ob = None
        if ob is not None:
            report.morse = ob["morse"]
            report.level_curves = ob["levelCurves"]
            report.fibers = ob["fibers"]
            big = bigraph_check(local, fibers=ob["grid"], vacuous=not diffeo.ok)
            report.bigraph = {
                "ok": big.ok,
                "sheetSizes": big.sheet_sizes,
                "sheetsConnected": big.sheets_connected,
                "interiorFibers": big.interior_fibers,
                "violations": big.violations,
                "vacuous": big.vacuous,
            }
            report.poincare_hopf = ob["poincareHopf"]
            checks = {
                "morseMinMaxOnly": report.morse["count"] == 2 and report.morse["indices"] == [0, 2],
                "levelCurvesConnected": all(lc["components"] == 1 for lc in report.level_curves),
                "fiberHitsAtMostTwo": report.fibers["maxHits"] <= 2,
                "twoHitFibersTransversal": report.fibers["twoHitNonTransversal"] == 0,
                "bigraph": big.ok,
                "poincareHopfTwo": report.poincare_hopf == 2,
            }
    applies = bool(diffeo.ok and model.admits_open_book)
    if applies:
        checks["embedded"] = not report.self_intersections
    failed = sorted(k for k, v in checks.items() if not v) if applies else []
    report.consistency = {
        "applies": applies,
        "checks": checks,
        "failed": failed,
        "ok": not failed,
    }
    return report
