import numpy as np
from pydantic import field_validator, model_validator

from uosdetect.errors import DimensionMismatch, NotOrthogonal, RankDeficient
from uosdetect.utilities.general import UoSModel, frozen_array

# relative singular-value cutoff for column rank
RANK_TOLERANCE = 1e-10
ORTHONORMAL_TOLERANCE = 1e-10


class Subspace(UoSModel):
    """
    An n-dimensional subspace of R^m held as an m x n matrix with orthonormal
    columns.
    """

    basis: np.ndarray

    @field_validator("basis", mode="before")
    @classmethod
    def _coerce_basis(cls, v):
        return frozen_array(v, ndim=2, name="basis")

    @model_validator(mode="after")
    def _check_orthonormal(self):
        m, n = self.basis.shape
        if n < 1 or m < n:
            raise DimensionMismatch(
                f"A subspace basis needs 1 <= n <= m columns, got shape {(m, n)}"
            )
        residual = np.max(np.abs(self.basis.T @ self.basis - np.eye(n)))
        if residual > ORTHONORMAL_TOLERANCE:
            raise NotOrthogonal(
                f"Basis columns are not orthonormal (max |B'B - I| = {residual:.3g})"
            )
        return self

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


def _fix_signs(u: np.ndarray) -> np.ndarray:
    """Flip columns so the largest-magnitude entry of each is positive."""
    rows = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[rows, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return u * signs


def _check_rank(singular_values: np.ndarray, rank: int, what: str) -> None:
    if (
        len(singular_values) < rank
        or singular_values[0] == 0
        or singular_values[rank - 1] <= RANK_TOLERANCE * singular_values[0]
    ):
        raise RankDeficient(f"{what} has column rank below {rank}")


def orthonormalize(raw_basis) -> Subspace:
    """
    Canonical orthonormal basis for the column space of `raw_basis` (thin SVD,
    column signs fixed).
    """
    raw = frozen_array(raw_basis, ndim=2, name="raw_basis")
    n = raw.shape[1]
    if n > raw.shape[0]:
        raise RankDeficient(f"{n} columns cannot be independent in R^{raw.shape[0]}")
    u, s, _ = np.linalg.svd(raw, full_matrices=False)
    _check_rank(s, n, "raw_basis")
    return Subspace(basis=_fix_signs(u))


def learn_basis_svd(samples, dim: int) -> Subspace:
    """
    Subspace spanned by the top-`dim` left singular vectors of a sample matrix
    holding one sample per column.
    """
    samples = frozen_array(samples, ndim=2, name="samples")
    m, p = samples.shape
    if not 1 <= dim <= m:
        raise DimensionMismatch(f"Cannot learn a {dim}-dimensional subspace of R^{m}")
    if p < dim:
        raise RankDeficient(f"{p} samples cannot span a {dim}-dimensional subspace")
    u, s, _ = np.linalg.svd(samples, full_matrices=False)
    _check_rank(s, dim, "samples")
    return Subspace(basis=_fix_signs(u[:, :dim]))


def projector(s: Subspace) -> np.ndarray:
    p = s.basis @ s.basis.T
    return (p + p.T) / 2


def complement_projector(s: Subspace) -> np.ndarray:
    return np.eye(s.ambient_dim) - projector(s)
