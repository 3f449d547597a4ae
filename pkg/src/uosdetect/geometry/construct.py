from typing import TYPE_CHECKING, Optional, Sequence, Union

import numpy as np

from uosdetect.errors import (
    DimensionMismatch,
    DomainError,
    InsufficientAmbientDim,
    NotOrthogonal,
)
from uosdetect.geometry.subspace import (
    ORTHONORMAL_TOLERANCE,
    Subspace,
    complement_projector,
    orthonormalize,
)
from uosdetect.utilities.general import frozen_array

if TYPE_CHECKING:
    from uosdetect.noise.models import Whitener


def rotated_subspace(
    base: Subspace, target_angles: Sequence[float], complement_directions
) -> Subspace:
    """
    Rotate each basis vector of `base` towards the matching complement
    direction, so column i becomes cos(phi_i) b_i + sin(phi_i) c_i and the
    principal angles to `base` are exactly the requested ones.
    """
    m, n = base.ambient_dim, base.dim
    if m < 2 * n:
        raise InsufficientAmbientDim(
            f"Rotating a {n}-dimensional subspace needs m >= {2 * n}, got m = {m}"
        )
    angles = np.asarray(target_angles, dtype=float)
    if angles.shape != (n,):
        raise DimensionMismatch(f"Expected {n} target angles, got shape {angles.shape}")
    if np.any(angles < 0) or np.any(angles > np.pi / 2):
        raise DomainError("Target angles must lie in [0, pi/2]")

    directions = frozen_array(complement_directions, ndim=2, name="complement_directions")
    if directions.shape != (m, n):
        raise DimensionMismatch(
            f"complement_directions must be {m}x{n}, got {directions.shape}"
        )
    if np.max(np.abs(directions.T @ directions - np.eye(n))) > ORTHONORMAL_TOLERANCE:
        raise NotOrthogonal("complement_directions are not orthonormal")
    if np.max(np.abs(base.basis.T @ directions)) > ORTHONORMAL_TOLERANCE:
        raise NotOrthogonal("complement_directions are not orthogonal to the base")

    return Subspace(basis=base.basis * np.cos(angles) + directions * np.sin(angles))


def complement_directions(base: Subspace, count: Optional[int] = None) -> np.ndarray:
    """
    A deterministic orthonormal set of `count` directions orthogonal to `base`,
    built from the coordinate axes with the largest complement component.
    For span{e1, e2} in R^4 this is exactly [e3, e4].
    """
    count = base.dim if count is None else count
    if count > base.ambient_dim - base.dim:
        raise InsufficientAmbientDim(
            f"Only {base.ambient_dim - base.dim} complement directions exist"
        )
    residual = complement_projector(base)
    norms = np.linalg.norm(residual, axis=0)
    columns = np.sort(np.argsort(-norms, kind="stable")[:count])
    q, r = np.linalg.qr(residual[:, columns])
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def random_subspace(m: int, n: int, rng: np.random.Generator) -> Subspace:
    return orthonormalize(rng.standard_normal((m, n)))


def whiten_subspace(s: Subspace, whitener: Union["Whitener", np.ndarray]) -> Subspace:
    inv_sqrt = np.asarray(getattr(whitener, "inv_sqrt", whitener))
    if inv_sqrt.shape != (s.ambient_dim, s.ambient_dim):
        raise DimensionMismatch(
            f"Whitener of shape {inv_sqrt.shape} cannot act on R^{s.ambient_dim}"
        )
    return orthonormalize(inv_sqrt @ s.basis)
