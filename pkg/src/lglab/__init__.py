"""Left invariant Gauss maps and embedded spheres in metric Lie groups R^2 x_A R."""
from .algebra import BranchTag, classify_exp_branch, exp2, exp2_oracle, m_of_D, solve_a_from_Db
from .group import (
    LieGroupModel,
    bracket_coefficients,
    classify,
    inverse,
    left_frame_at,
    metric_at,
    multiply,
    named_matrix,
    normalize_upper_triangular,
    right_frame_at,
)
from .openbook import Fiber, angular_field_at, fiber_through, make_open_book, pi_sigma_left, quotient_pi
from .surface import (
    SphereMesh,
    is_gauss_diffeo,
    left_gauss_map,
    load_mesh,
    make_round_sphere,
    make_self_intersecting_sphere,
    right_gauss_map,
    save_mesh,
)
from .verify import (
    VerifyConfig,
    bigraph_check,
    critical_points_of_height,
    fiber_hits,
    full_report,
    level_curves,
    poincare_hopf_index_sum,
)
from .intersect import mesh_self_intersections

__version__ = "0.1.0"


def self_intersections(mesh):
    """Intersecting face pairs of a SphereMesh (faces sharing a vertex are skipped)."""
    return [tuple(int(v) for v in p) for p in mesh_self_intersections(mesh.vertices, mesh.faces)]
