"""Open book geometry in the model where the binding is the x-axis.

After rotating ``A`` so that its (2, 1) entry vanishes, every left coset of the
binding ``{(x, 0, 0)}`` is a coordinate line ``{(t, y, z)}`` and the quotient
map to the space of cosets is the projection ``(x, y, z) -> (y, z)``.
"""
from dataclasses import dataclass

import numpy as np

from .errors import SingularPointError, UnsupportedGroupError
from .group import LieGroupModel, as_points, classify, normalize_upper_triangular


@dataclass(frozen=True)
class Fiber:
    y: float
    z: float

    @property
    def center(self):
        return (self.y, self.z)


@dataclass(frozen=True)
class OpenBookModel:
    group: LieGroupModel
    A: np.ndarray  # upper triangular, A[1, 0] == 0 exactly
    rotation: np.ndarray  # S with A = S A' S^T

    @property
    def binding(self) -> Fiber:
        return Fiber(0.0, 0.0)

    def to_model_coords(self, g) -> np.ndarray:
        """Map points of ``R^2 x_A R`` to ``R^2 x_A' R`` via ``(p, z) -> (S^T p, z)``.

        The map is an isomorphism and an isometry of the canonical metrics.
        """
        g = as_points(g)
        out = g.copy()
        out[..., :2] = g[..., :2] @ self.rotation
        return out

    def from_model_coords(self, g) -> np.ndarray:
        g = as_points(g)
        out = g.copy()
        out[..., :2] = g[..., :2] @ self.rotation.T
        return out


def make_open_book(model) -> OpenBookModel:
    if not isinstance(model, LieGroupModel):
        model = classify(model)
    if not model.admits_open_book:
        raise UnsupportedGroupError(model.label)
    At, S = normalize_upper_triangular(model.input_matrix)
    return OpenBookModel(group=model, A=At, rotation=S)


def quotient_pi(g) -> np.ndarray:
    """Project onto the space of left cosets of the binding: ``(y, z)``."""
    g = as_points(g)
    return g[..., 1:3].copy()


def pi_sigma_left(g):
    """Index of the left coset of the plane subgroup ``P_0`` containing ``g``."""
    g = as_points(g)
    return g[..., 2].copy() if g.ndim > 1 else float(g[2])


def fiber_through(g) -> Fiber:
    g = as_points(g)
    return Fiber(float(g[1]), float(g[2]))


def angular_field_at(g, center=(0.0, 0.0)) -> np.ndarray:
    """Unit rotation field about the fiber over ``center``, constant along fibers.

    Returns ``(0, -(z - zc), y - yc)`` normalized; broadcasts over points.
    """
    g = as_points(g)
    dy = g[..., 1] - center[0]
    dz = g[..., 2] - center[1]
    r = np.hypot(dy, dz)
    if np.any(r == 0.0):
        raise SingularPointError("angular field evaluated on the central fiber")
    out = np.zeros(g.shape)
    out[..., 1] = -dz / r
    out[..., 2] = dy / r
    return out
