from itertools import combinations
from typing import TYPE_CHECKING, Optional, Sequence

import numpy as np
from pydantic import field_validator, model_validator

from uosdetect.errors import DimensionMismatch, InsufficientAmbientDim
from uosdetect.geometry.angles import principal_angles
from uosdetect.geometry.construct import whiten_subspace
from uosdetect.geometry.subspace import Subspace, orthonormalize
from uosdetect.utilities.general import UoSModel, frozen_array
from uosdetect.utilities.logging import get_logger

if TYPE_CHECKING:
    from uosdetect.noise.models import Whitener

logger = get_logger(__name__)

DUPLICATE_TOLERANCE = 1e-8


class UnionModel(UoSModel):
    """
    K0 subspaces of common dimension n in R^m. Disjointness is not enforced;
    pairs whose principal angles all vanish are reported by
    `near_identical_pairs` and logged at construction.
    """

    subspaces: tuple[Subspace, ...]

    @model_validator(mode="after")
    def _check_shapes(self):
        if not self.subspaces:
            raise DimensionMismatch("A union needs at least one subspace")
        shapes = {s.basis.shape for s in self.subspaces}
        if len(shapes) != 1:
            raise DimensionMismatch(
                f"All subspaces must share ambient and subspace dimension, got {sorted(shapes)}"
            )
        pairs = self.near_identical_pairs()
        if pairs:
            logger.warning(f"Near-identical subspace pairs in union: {pairs}")
        return self

    @classmethod
    def from_bases(cls, bases: Sequence) -> "UnionModel":
        return cls(subspaces=tuple(orthonormalize(b) for b in bases))

    @property
    def ambient_dim(self) -> int:
        return self.subspaces[0].ambient_dim

    @property
    def subspace_dim(self) -> int:
        return self.subspaces[0].dim

    @property
    def n_subspaces(self) -> int:
        return len(self.subspaces)

    @property
    def bases(self) -> np.ndarray:
        """Stacked bases, shape (K0, m, n)."""
        return np.stack([s.basis for s in self.subspaces])

    def near_identical_pairs(
        self, tolerance: float = DUPLICATE_TOLERANCE
    ) -> list[tuple[int, int]]:
        return [
            (i, j)
            for i, j in combinations(range(len(self.subspaces)), 2)
            if np.all(
                principal_angles(self.subspaces[i], self.subspaces[j]).angles
                < tolerance
            )
        ]


class UnionGeometry(UoSModel):
    min_angles: np.ndarray
    angle_sums: np.ndarray
    cumulative_min: np.ndarray
    near_identical: tuple[tuple[int, int], ...]
    whitened: bool

    @field_validator("min_angles", "angle_sums", mode="before")
    @classmethod
    def _coerce_matrix(cls, v):
        return frozen_array(v, ndim=2)

    @field_validator("cumulative_min", mode="before")
    @classmethod
    def _coerce_vector(cls, v):
        return frozen_array(v, ndim=1)


def union_geometry(
    model: UnionModel, whitener: Optional["Whitener"] = None
) -> UnionGeometry:
    """
    Pairwise minimum and summed principal angles of a union, optionally between
    the whitened subspaces, plus each subspace's cumulative minimum angle to
    all others.
    """
    subspaces = model.subspaces
    if whitener is not None:
        subspaces = tuple(whiten_subspace(s, whitener) for s in subspaces)

    k0 = len(subspaces)
    min_angles = np.zeros((k0, k0))
    angle_sums = np.zeros((k0, k0))
    near_identical = []
    for i, j in combinations(range(k0), 2):
        angles = principal_angles(subspaces[i], subspaces[j]).angles
        min_angles[i, j] = min_angles[j, i] = angles[0]
        angle_sums[i, j] = angle_sums[j, i] = np.sum(angles)
        if np.all(angles < DUPLICATE_TOLERANCE):
            near_identical.append((i, j))

    return UnionGeometry(
        min_angles=min_angles,
        angle_sums=angle_sums,
        cumulative_min=min_angles.sum(axis=1),
        near_identical=tuple(near_identical),
        whitened=whitener is not None,
    )


def direct_sum(model: UnionModel) -> Subspace:
    """The span of all bases of the union."""
    total = model.n_subspaces * model.subspace_dim
    if total > model.ambient_dim:
        raise InsufficientAmbientDim(
            f"Direct sum of dimension {total} does not fit in R^{model.ambient_dim}"
        )
    return orthonormalize(np.hstack([s.basis for s in model.subspaces]))
