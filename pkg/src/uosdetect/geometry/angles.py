import numpy as np
import scipy.linalg
from pydantic import field_validator, model_validator

from uosdetect.errors import DimensionMismatch
from uosdetect.geometry.subspace import Subspace
from uosdetect.utilities.general import UoSModel, frozen_array


class PrincipalAngleSet(UoSModel):
    """
    Principal angles between two subspaces, nondecreasing, with the principal
    vector pairs as matching columns of `left_vectors` and `right_vectors`.
    """

    angles: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray

    @field_validator("angles", mode="before")
    @classmethod
    def _coerce_angles(cls, v):
        return frozen_array(v, ndim=1, name="angles")

    @field_validator("left_vectors", "right_vectors", mode="before")
    @classmethod
    def _coerce_vectors(cls, v):
        return frozen_array(v, ndim=2, name="principal vectors")

    @model_validator(mode="after")
    def _check_order(self):
        if np.any(np.diff(self.angles) < -1e-10):
            raise DimensionMismatch("principal angles must be nondecreasing")
        if self.left_vectors.shape != self.right_vectors.shape or (
            self.left_vectors.shape[1] != len(self.angles)
        ):
            raise DimensionMismatch("one principal vector pair is needed per angle")
        return self

    @property
    def minimum(self) -> float:
        return float(self.angles[0])

    @property
    def total(self) -> float:
        return float(np.sum(self.angles))


def principal_angles(a: Subspace, b: Subspace) -> PrincipalAngleSet:
    """
    Principal angles and vectors between two subspaces of the same ambient space.

    The vectors come from the SVD of the cross-Gramian A'B. The angles are taken
    from `scipy.linalg.subspace_angles`, which switches to a sine-based formula
    for small angles where arccos of a singular value near 1 loses precision.
    """
    if a.ambient_dim != b.ambient_dim:
        raise DimensionMismatch(
            f"Subspaces live in R^{a.ambient_dim} and R^{b.ambient_dim}"
        )
    r = min(a.dim, b.dim)
    u, _, vt = np.linalg.svd(a.basis.T @ b.basis)
    angles = np.sort(scipy.linalg.subspace_angles(a.basis, b.basis))
    angles = np.clip(angles, 0.0, np.pi / 2)
    return PrincipalAngleSet(
        angles=angles[:r],
        left_vectors=a.basis @ u[:, :r],
        right_vectors=b.basis @ vt[:r].T,
    )
