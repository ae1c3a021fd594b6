"""The semidirect product R^2 x_A R: group law, frames, metric, classification.

Points are numpy arrays whose last axis holds model coordinates ``(x, y, z)``;
all group operations broadcast over leading axes.
"""
from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    BRANCH_TOL,
    as_mat2,
    det2,
    discriminant,
    exp2,
    solve_a_from_Db,
    trace2,
)
from .errors import (
    DomainError,
    InvalidArgumentError,
    NotTriangularizableError,
    UnclassifiedUnimodularError,
)

IDENTITY = np.zeros(3)

UNIMODULAR_TOL = 1e-12
MATCH_TOL = 1e-9
# D <= 1 comparison; D computed from canonical (a, b) carries rounding.
OPEN_BOOK_D_TOL = 1e-12

UNIMODULAR = "Unimodular"
NON_UNIMODULAR = "NonUnimodularNormalized"

OPEN_BOOK_UNIMODULAR = frozenset({"R3", "Nil3", "Sol3"})


def as_points(g) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    if g.shape[-1:] != (3,):
        raise InvalidArgumentError(f"group points need a trailing axis of length 3, got {g.shape}")
    if not np.all(np.isfinite(g)):
        raise InvalidArgumentError("group point coordinates must be finite")
    return g


def multiply(A, g1, g2) -> np.ndarray:
    """Group product ``(p1, z1) * (p2, z2) = (p1 + e^{z1 A} p2, z1 + z2)``."""
    g1, g2 = as_points(g1), as_points(g2)
    E = exp2(A, g1[..., 2])
    p = g1[..., :2] + np.einsum("...ij,...j->...i", E, g2[..., :2])
    return np.concatenate([p, (g1[..., 2] + g2[..., 2])[..., None]], axis=-1)


def inverse(A, g) -> np.ndarray:
    g = as_points(g)
    E = exp2(A, -g[..., 2])
    p = -np.einsum("...ij,...j->...i", E, g[..., :2])
    return np.concatenate([p, -g[..., 2:3]], axis=-1)


def left_frame_matrix(A, z) -> np.ndarray:
    """Matrix whose columns are E1, E2, E3 at height ``z`` (coordinate basis)."""
    z = np.asarray(z, dtype=float)
    P = np.zeros(z.shape + (3, 3))
    P[..., :2, :2] = exp2(A, z)
    P[..., 2, 2] = 1.0
    return P


def left_frame_inverse(A, z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    Q = np.zeros(z.shape + (3, 3))
    Q[..., :2, :2] = exp2(A, -z)
    Q[..., 2, 2] = 1.0
    return Q


def right_frame_matrix(A, g) -> np.ndarray:
    """Columns F1 = dx, F2 = dy, F3 = (ax+by) dx + (cx+dy) dy + dz."""
    A = as_mat2(A)
    g = as_points(g)
    F = np.zeros(g.shape[:-1] + (3, 3))
    F[..., 0, 0] = 1.0
    F[..., 1, 1] = 1.0
    F[..., :2, 2] = np.einsum("ij,...j->...i", A, g[..., :2])
    F[..., 2, 2] = 1.0
    return F


@dataclass(frozen=True)
class FrameAt:
    base: np.ndarray
    E1: np.ndarray
    E2: np.ndarray
    E3: np.ndarray

    @property
    def matrix(self):
        return np.column_stack([self.E1, self.E2, self.E3])


@dataclass(frozen=True)
class RightFrameAt:
    base: np.ndarray
    F1: np.ndarray
    F2: np.ndarray
    F3: np.ndarray

    @property
    def matrix(self):
        return np.column_stack([self.F1, self.F2, self.F3])


def left_frame_at(A, g) -> FrameAt:
    g = as_points(g)
    P = left_frame_matrix(A, g[2])
    return FrameAt(g.copy(), P[:, 0], P[:, 1], P[:, 2])


def right_frame_at(A, g) -> RightFrameAt:
    g = as_points(g)
    F = right_frame_matrix(A, g)
    return RightFrameAt(g.copy(), F[:, 0], F[:, 1], F[:, 2])


def metric_at(A, g) -> np.ndarray:
    """Coordinate matrix of the canonical metric, ``(P P^T)^{-1}``.

    Evaluated as ``P^{-T} P^{-1}`` with the exact inverse ``P^{-1}`` built from
    ``e^{-zA}``, which avoids inverting an ill-conditioned Gram matrix.
    """
    g = as_points(g)
    Q = left_frame_inverse(A, g[..., 2])
    return np.swapaxes(Q, -1, -2) @ Q


def left_translate_map_jacobian(A, a, g=None) -> np.ndarray:
    """Jacobian of ``g -> a * g``; it does not depend on ``g``."""
    a = as_points(a)
    J = np.zeros(a.shape[:-1] + (3, 3))
    J[..., :2, :2] = exp2(A, a[..., 2])
    J[..., 2, 2] = 1.0
    return J


def bracket_coefficients(A) -> dict:
    """Structure constants ``[E_i, E_j] = sum_k C[k] E_k`` for ordered pairs (i, j).

    Keys are 1-based index pairs; each value is the coefficient 3-vector.
    """
    A = as_mat2(A)
    a, b, c, d = A.ravel()
    zero = np.zeros(3)
    base = {
        (1, 2): zero,
        (3, 1): np.array([a, c, 0.0]),
        (3, 2): np.array([b, d, 0.0]),
    }
    out = {}
    for i in range(1, 4):
        for j in range(1, 4):
            if i == j:
                out[(i, j)] = zero.copy()
            elif (i, j) in base:
                out[(i, j)] = base[(i, j)].copy()
            else:
                out[(i, j)] = -base[(j, i)]
    return out


def numeric_bracket(A, i, j, g, h=1e-4) -> np.ndarray:
    """Central-difference ``[E_i, E_j](g) = E_i(E_j) - E_j(E_i)`` in coordinates."""
    if i not in (1, 2, 3) or j not in (1, 2, 3):
        raise InvalidArgumentError("frame indices must be 1, 2 or 3")
    if not h > 0:
        raise InvalidArgumentError("step must be positive")
    g = as_points(g)

    def field_at(k, pt):
        return left_frame_matrix(A, pt[2])[:, k - 1]

    def jacobian(k):
        J = np.empty((3, 3))
        for m in range(3):
            step = np.zeros(3)
            step[m] = h
            J[:, m] = (field_at(k, g + step) - field_at(k, g - step)) / (2 * h)
        return J

    U, V = field_at(i, g), field_at(j, g)
    return jacobian(j) @ U - jacobian(i) @ V


# --- classification -------------------------------------------------------


def _invariants(M):
    """(half trace, det, skew part k, norm of trace-free symmetric part)."""
    half_tr = 0.5 * trace2(M)
    k = 0.5 * (M[1, 0] - M[0, 1])
    sigma = float(np.hypot(0.5 * (M[0, 0] - M[1, 1]), 0.5 * (M[0, 1] + M[1, 0])))
    return half_tr, det2(M), float(k), sigma


@dataclass(frozen=True)
class LieGroupModel:
    """A classified semidirect product.

    ``A`` is the working matrix: the input for unimodular groups, and the
    input rescaled to trace 2 (after an orientation flip if the trace was
    negative) for non-unimodular ones.
    """

    A: np.ndarray
    trace_class: str
    kind: str
    D: float
    admits_open_book: bool
    params: dict = field(default_factory=dict)
    input_matrix: np.ndarray = None
    scale: float = 1.0
    orientation_flip: bool = False

    @property
    def label(self) -> str:
        if not self.params:
            return self.kind
        inner = ",".join(f"{k}={_fmt(v)}" for k, v in self.params.items())
        return f"{self.kind}({inner})"

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "kind": self.kind,
            "traceClass": self.trace_class,
            "params": {k: float(v) for k, v in self.params.items()},
            "D": float(self.D),
            "admitsOpenBook": bool(self.admits_open_book),
            "matrix": [float(v) for v in self.A.ravel()],
            "inputMatrix": [float(v) for v in self.input_matrix.ravel()],
            "scale": float(self.scale),
            "orientationFlip": bool(self.orientation_flip),
        }


def _fmt(v):
    return f"{float(v):.6g}"


def canonical_nonunimodular(a: float, b: float) -> np.ndarray:
    if a < 0 or b < 0:
        raise DomainError(f"canonical parameters must be nonnegative, got a={a}, b={b}")
    p = 1.0 + a
    # 2 - p is exact for p in [1, 4], which keeps the trace exactly 2
    q = 2.0 - p if p <= 4.0 else 1.0 - a
    return np.array([[p, -(1.0 - a) * b], [p * b, q]])


def nonunimodular_from_Db(D: float, b: float) -> np.ndarray:
    return canonical_nonunimodular(solve_a_from_Db(D, b), b)


def sol3_matrix(c: float = 1.0) -> np.ndarray:
    return np.array([[0.0, c], [1.0 / c, 0.0]])


def e2tilde_matrix(c: float = 1.0) -> np.ndarray:
    return np.array([[0.0, -c], [1.0 / c, 0.0]])


NIL3 = np.array([[0.0, 1.0], [0.0, 0.0]])
R3 = np.zeros((2, 2))
H3 = np.eye(2)


def _classify_unimodular(A):
    n = float(np.max(np.abs(A)))
    if n <= MATCH_TOL:
        return "R3", {}, R3
    M = A / n
    _, det, k, sigma = _invariants(M)
    if abs(det) <= MATCH_TOL:
        kind, params, canon = "Nil3", {}, NIL3
        scale = 2.0 * sigma
    elif det < 0:
        r = abs(k) / np.sqrt(-det)
        c = r + np.sqrt(r * r + 1.0)
        kind, params, canon = "Sol3", {"c": c}, sol3_matrix(c)
        scale = np.sqrt(-det)
    else:
        r = abs(k) / np.sqrt(det)
        c = r + np.sqrt(max(r * r - 1.0, 0.0))
        kind, params, canon = "E2tilde", {"c": c}, e2tilde_matrix(c)
        scale = np.sqrt(det)
    # guard: the rescaled canonical form must reproduce every invariant
    _, cdet, ck, csig = _invariants(scale * canon)
    got = np.array([det, abs(k), sigma])
    want = np.array([cdet, abs(ck), csig])
    if not np.all(np.abs(got - want) <= MATCH_TOL * max(1.0, np.max(np.abs(got)))):
        raise UnclassifiedUnimodularError(
            "trace-free matrix does not match a canonical unimodular model",
            {"det": det * n * n, "skew": k * n, "sym": sigma * n},
        )
    return kind, params, canon


def classify(A) -> LieGroupModel:
    """Identify the metric Lie group ``R^2 x_A R`` with its canonical metric."""
    A = as_mat2(A)
    tr = trace2(A)
    if abs(tr) <= UNIMODULAR_TOL:
        kind, params, _ = _classify_unimodular(A)
        return LieGroupModel(
            A=A.copy(),
            trace_class=UNIMODULAR,
            kind=kind,
            D=det2(A),
            admits_open_book=kind in OPEN_BOOK_UNIMODULAR,
            params=params,
            input_matrix=A.copy(),
        )
    flip = tr < 0
    W = -A if flip else A
    scale = 0.5 * abs(tr)
    An = W / scale
    half_tr, D, k, sigma = _invariants(An)
    if np.max(np.abs(An - np.eye(2))) <= MATCH_TOL:
        kind, params = "H3", {}
    else:
        b = abs(k)
        a = sigma / np.sqrt(1.0 + b * b)
        kind, params = "NonUnimodular", {"D": D, "b": b, "a": a}
    return LieGroupModel(
        A=An,
        trace_class=NON_UNIMODULAR,
        kind=kind,
        D=D,
        admits_open_book=D <= 1.0 + OPEN_BOOK_D_TOL,
        params=params,
        input_matrix=A.copy(),
        scale=scale,
        orientation_flip=flip,
    )


def normalize_upper_triangular(A):
    """Rotate ``A`` into real Schur form.

    Returns ``(A', S)`` with ``S`` a rotation and ``A' = S^T A S`` upper
    triangular; the larger eigenvalue comes first and ``A'[1, 0]`` is set to
    exactly 0.
    """
    A = as_mat2(A)
    if A[1, 0] == 0.0:
        return A.copy(), np.eye(2)
    delta = discriminant(A)
    if delta < -BRANCH_TOL:
        raise NotTriangularizableError(f"complex eigenvalues (delta={delta}); no real Schur form")
    lam = 0.5 * trace2(A) + np.sqrt(max(delta, 0.0))
    R = A - lam * np.eye(2)
    # hypot avoids underflow of tiny entries
    n0, n1 = np.hypot(*R[0]), np.hypot(*R[1])
    row = R[0] if n0 >= n1 else R[1]
    nrm = max(n0, n1)
    if nrm == 0.0:
        return A.copy(), np.eye(2)
    v = np.array([-row[1], row[0]]) / nrm
    if v[0] < 0 or (v[0] == 0 and v[1] < 0):
        v = -v
    S = np.array([[v[0], -v[1]], [v[1], v[0]]])
    At = S.T @ A @ S
    if abs(At[1, 0]) > 1e-12 * max(1.0, np.max(np.abs(A))):
        raise NotTriangularizableError(f"Schur residual {At[1, 0]} too large")
    At[1, 0] = 0.0
    return At, S


# --- named models -----------------------------------------------------------


def named_matrix(name: str) -> np.ndarray:
    """Matrix for a shortcut like ``nil3``, ``sol3:2``, ``nonuni:0.5,1``."""
    key, _, arg = name.strip().lower().partition(":")
    args = [float(t) for t in arg.split(",")] if arg else []

    def want(n):
        if len(args) != n:
            raise InvalidArgumentError(f"group '{key}' takes {n} parameter(s), got {len(args)}")

    if key == "r3":
        want(0)
        return R3.copy()
    if key == "nil3":
        want(0)
        return NIL3.copy()
    if key == "h3":
        want(0)
        return H3.copy()
    if key in ("h2xr", "h2r"):
        want(0)
        return nonunimodular_from_Db(0.0, 0.0)
    if key == "sol3":
        c = args[0] if args else 1.0
        if len(args) > 1 or c <= 0:
            raise InvalidArgumentError("sol3 takes one positive parameter")
        return sol3_matrix(c)
    if key == "e2tilde":
        c = args[0] if args else 1.0
        if len(args) > 1 or c <= 0:
            raise InvalidArgumentError("e2tilde takes one positive parameter")
        return e2tilde_matrix(c)
    if key == "nonuni":
        want(2)
        return nonunimodular_from_Db(*args)
    if key == "matrix":
        want(4)
        return as_mat2(args)
    raise InvalidArgumentError(f"unknown group '{name}'")
