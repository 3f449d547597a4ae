from .subspace import (
    Subspace,
    orthonormalize,
    projector,
    complement_projector,
    learn_basis_svd,
)
from .angles import PrincipalAngleSet, principal_angles
from .construct import (
    rotated_subspace,
    complement_directions,
    random_subspace,
    whiten_subspace,
)
from .union import UnionModel, UnionGeometry, union_geometry, direct_sum
