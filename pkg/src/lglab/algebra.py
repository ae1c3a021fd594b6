"""Small-matrix kernels: 2x2 exponentials and the (D, b) parameter algebra.

Matrices are plain numpy arrays of shape (2, 2) (or (3, 3) for metric and
frame matrices). Every function here is pure.
"""
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError, InvalidArgumentError

BRANCH_TOL = 1e-9

_ORACLE_TERM_TOL = 1e-18
_ORACLE_MAX_TERMS = 60


class BranchTag(str, Enum):
    REAL_DISTINCT = "RealDistinct"
    COMPLEX_PAIR = "ComplexPair"
    REPEATED = "Repeated"


@dataclass(frozen=True)
class ExpBranch:
    tag: BranchTag
    delta: float


def as_mat2(A) -> np.ndarray:
    """Validate and copy ``A`` into a float (2, 2) array."""
    M = np.array(A, dtype=float)
    if M.shape == (4,):
        M = M.reshape(2, 2)
    if M.shape != (2, 2):
        raise InvalidArgumentError(f"expected a 2x2 matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvalidArgumentError("matrix entries must be finite")
    return M


def trace2(A) -> float:
    return float(A[0, 0] + A[1, 1])


def det2(A) -> float:
    return float(A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0])


def discriminant(A) -> float:
    """trace^2/4 - det, evaluated as ((a-d)/2)^2 + bc to avoid cancellation."""
    h = 0.5 * (A[0, 0] - A[1, 1])
    return float(h * h + A[0, 1] * A[1, 0])


def classify_exp_branch(A) -> ExpBranch:
    A = as_mat2(A)
    delta = discriminant(A)
    if abs(delta) <= BRANCH_TOL:
        tag = BranchTag.REPEATED
    elif delta > 0:
        tag = BranchTag.REAL_DISTINCT
    else:
        tag = BranchTag.COMPLEX_PAIR
    return ExpBranch(tag, delta)


def exp2(A, z):
    """Closed-form ``e^{zA}`` for a 2x2 matrix.

    ``z`` may be a scalar or an array; the result has shape ``z.shape + (2, 2)``.

    With ``B = A - (tr/2) I`` one has ``B @ B = delta * I``, so
    ``e^{zA} = e^{z tr/2} (C(z) I + S(z) B)`` where ``C`` and ``S`` are the
    cosh/sinh (or cos/sin) pair of ``sqrt(|delta|) z``. Real distinct
    eigenvalues go through the spectral projectors instead.
    """
    A = as_mat2(A)
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise InvalidArgumentError("z must be finite")
    half_tr = 0.5 * trace2(A)
    B = A - half_tr * np.eye(2)
    branch = classify_exp_branch(A)
    delta = branch.delta
    if branch.tag is BranchTag.REPEATED:
        # Taylor expansion in delta; reduces to I + zB when delta == 0.
        z2 = z * z
        dz2 = delta * z2
        C = 1.0 + dz2 / 2.0 * (1.0 + dz2 / 12.0 * (1.0 + dz2 / 30.0))
        S = z * (1.0 + dz2 / 6.0 * (1.0 + dz2 / 20.0 * (1.0 + dz2 / 42.0)))
    elif branch.tag is BranchTag.REAL_DISTINCT:
        return _exp2_real_distinct(A, B, half_tr, delta, z)
    else:
        w = np.sqrt(-delta)
        C = np.cos(w * z)
        S = np.sin(w * z) / w
    scale = np.exp(half_tr * z)
    out = np.empty(z.shape + (2, 2))
    out[..., 0, 0] = scale * (C + S * B[0, 0])
    out[..., 0, 1] = scale * (S * B[0, 1])
    out[..., 1, 0] = scale * (S * B[1, 0])
    out[..., 1, 1] = scale * (C + S * B[1, 1])
    return out


def _exp2_real_distinct(A, B, half_tr, delta, z):
    """Spectral form ``e^{z l+} P+ + e^{z l-} P-``.

    cosh/sinh cancel badly once ``e^{wz}`` is large, so the projectors and the
    eigenvalues are formed without subtracting nearly equal numbers.
    """
    w = np.sqrt(delta)
    bc = B[0, 1] * B[1, 0]  # equals w^2 - B00^2 >= 0
    if B[0, 0] >= 0:
        p0 = w + B[0, 0]
        m0 = bc / p0
    else:
        m0 = w - B[0, 0]
        p0 = bc / m0
    det = det2(A)
    if half_tr >= 0:
        lp = half_tr + w
        lm = det / lp
    else:
        lm = half_tr - w
        lp = det / lm
    ep, em = np.exp(lp * z), np.exp(lm * z)
    out = np.empty(z.shape + (2, 2))
    out[..., 0, 0] = (ep * p0 + em * m0) / (2 * w)
    out[..., 0, 1] = (ep - em) * (B[0, 1] / (2 * w))
    out[..., 1, 0] = (ep - em) * (B[1, 0] / (2 * w))
    out[..., 1, 1] = (ep * m0 + em * p0) / (2 * w)
    return out


def exp2_oracle(A, z) -> np.ndarray:
    """Scaling-and-squaring power series for ``e^{zA}``; reference values only."""
    A = as_mat2(A)
    z = float(z)
    if not np.isfinite(z):
        raise InvalidArgumentError("z must be finite")
    M = z * A
    norm = np.max(np.abs(M))
    s = 0
    while norm / 2.0**s > 0.5:
        s += 1
    M = M / 2.0**s
    total = np.eye(2)
    term = np.eye(2)
    for k in range(1, _ORACLE_MAX_TERMS + 1):
        term = term @ M / k
        total = total + term
        if np.max(np.abs(term)) < _ORACLE_TERM_TOL:
            break
    for _ in range(s):
        total = total @ total
    return total


def m_of_D(D: float) -> float:
    """Lower end of the admissible b-range for Milnor invariant ``D``."""
    return float(np.sqrt(D - 1.0)) if D > 1.0 else 0.0


def solve_a_from_Db(D: float, b: float, tol: float = 1e-12) -> float:
    """Nonnegative ``a`` with ``(1 - a^2)(1 + b^2) = D``.

    Raises DomainError when ``b < m(D)``: no canonical non-unimodular model has
    these invariants. ``tol`` absorbs rounding at the boundary ``b = m(D)``.
    """
    if not (np.isfinite(D) and np.isfinite(b)):
        raise InvalidArgumentError("D and b must be finite")
    if b < 0:
        raise DomainError(f"b must be nonnegative, got {b}")
    a2 = 1.0 - D / (1.0 + b * b)
    if a2 < 0.0:
        if a2 < -tol:
            raise DomainError(f"no canonical model for D={D}, b={b}: need b >= m(D) = {m_of_D(D)}")
        a2 = 0.0
    return float(np.sqrt(a2))
