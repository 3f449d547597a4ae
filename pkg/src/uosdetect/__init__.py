# --- Public top-level API ---

from .settings import settings

from .errors import UoSError
from .geometry import (
    Subspace,
    UnionModel,
    PrincipalAngleSet,
    orthonormalize,
    projector,
    complement_projector,
    principal_angles,
    rotated_subspace,
    learn_basis_svd,
)
from .noise import NoiseModel, NoiseRegime, Whitener
from .detect import DetectionOutcome, PreparedUnion, prepare
from .bounds import BoundReport, EventProbabilities
from .sim import Scenario, calibrate_threshold, run_trials, roc_sweep


# --- Version ---

try:
    from ._version import version as __version__  # type: ignore
except ImportError:
    __version__ = "unknown"
