from typing import Optional

import numpy as np
from pydantic import field_validator, model_validator

from uosdetect.errors import (
    DimensionMismatch,
    NearSingular,
    NotPositiveDefinite,
    RankDeficient,
    TooFewSamples,
)
from uosdetect.geometry import UnionModel, direct_sum
from uosdetect.geometry.subspace import RANK_TOLERANCE
from uosdetect.noise import NoiseModel, NoiseRegime, Whitener
from uosdetect.noise.linalg import SPD_TOLERANCE, inverse_sqrt, sample_covariance
from uosdetect.utilities.general import UoSModel, frozen_array
from uosdetect.utilities.logging import get_logger

logger = get_logger(__name__)

PROJECTOR_TOLERANCE = 1e-8


def _transpose(a: np.ndarray) -> np.ndarray:
    return np.swapaxes(a, -1, -2)


def whitened_projectors(inv_sqrt: np.ndarray, bases: np.ndarray) -> np.ndarray:
    """
    Projectors G (G'G)^{-1} G' onto the whitened subspaces G = W H.

    `inv_sqrt` is (m, m) or a stack (T, m, m); `bases` is (K0, m, n). The
    result is (K0, m, m) or (T, K0, m, m).
    """
    g = inv_sqrt[..., None, :, :] @ bases
    gram = _transpose(g) @ g
    eigenvalues = np.linalg.eigvalsh(gram)
    if np.any(eigenvalues[..., 0] <= (RANK_TOLERANCE**2) * eigenvalues[..., -1]):
        raise RankDeficient("A whitened basis lost rank")
    p = g @ np.linalg.solve(gram, _transpose(g))
    return (p + _transpose(p)) / 2


def empirical_whiteners(training: np.ndarray) -> np.ndarray:
    """
    Sigma^{-1/2} for a stack of training sets of shape (T, m, N0), where
    Sigma = Xi Xi' / N0 per trial.
    """
    _, m, n0 = training.shape
    if n0 <= m:
        raise TooFewSamples(f"N0 = {n0} training samples do not exceed m = {m}")
    sigma = training @ _transpose(training) / n0
    eigenvalues, eigenvectors = np.linalg.eigh((sigma + _transpose(sigma)) / 2)
    if np.any(eigenvalues[:, 0] <= 0):
        raise NotPositiveDefinite("A sample covariance is not positive definite")
    if np.any(eigenvalues[:, 0] < SPD_TOLERANCE * eigenvalues[:, -1]):
        raise NearSingular("A sample covariance is near singular")
    w = (eigenvectors / np.sqrt(eigenvalues)[:, None, :]) @ _transpose(eigenvectors)
    return (w + _transpose(w)) / 2


class PreparedUnion(UoSModel):
    """
    Everything a detector needs for one noise model: the whitener and the
    projectors onto the whitened subspaces of the union.
    """

    projectors: np.ndarray
    bases: np.ndarray
    whitener: Whitener
    regime: NoiseRegime
    sigma2: Optional[float] = None
    n0: Optional[int] = None

    @field_validator("projectors", "bases", mode="before")
    @classmethod
    def _coerce(cls, v, info):
        return frozen_array(v, ndim=3, name=info.field_name)

    @model_validator(mode="after")
    def _check_projectors(self):
        k0, m, _ = self.bases.shape
        if self.projectors.shape != (k0, m, m) or self.whitener.ambient_dim != m:
            raise DimensionMismatch(
                f"Projectors {self.projectors.shape} do not match bases {self.bases.shape}"
            )
        idempotency = np.max(np.abs(self.projectors @ self.projectors - self.projectors))
        if idempotency > PROJECTOR_TOLERANCE:
            raise RankDeficient(f"Projectors are not idempotent ({idempotency:.3g})")
        return self

    @property
    def ambient_dim(self) -> int:
        return self.bases.shape[1]

    @property
    def subspace_dim(self) -> int:
        return self.bases.shape[2]

    @property
    def n_subspaces(self) -> int:
        return self.bases.shape[0]


def prepare(model: UnionModel, noise: NoiseModel) -> PreparedUnion:
    """
    Whiten the union with R^{-1/2} (known regime) or with Sigma^{-1/2} from the
    training samples (both unknown regimes).
    """
    if model.ambient_dim != noise.ambient_dim:
        raise DimensionMismatch(
            f"Union lives in R^{model.ambient_dim}, noise in R^{noise.ambient_dim}"
        )
    if noise.regime is NoiseRegime.KNOWN:
        whitener = inverse_sqrt(noise.covariance)
    else:
        whitener = inverse_sqrt(sample_covariance(noise.training_samples))

    bases = model.bases
    prepared = PreparedUnion(
        projectors=whitened_projectors(whitener.inv_sqrt, bases),
        bases=bases,
        whitener=whitener,
        regime=noise.regime,
        sigma2=noise.sigma2,
        n0=noise.n0,
    )
    logger.debug(
        f"Prepared {model.n_subspaces} subspaces for the {noise.regime.value} regime"
    )
    return prepared


def prepare_direct_sum(model: UnionModel, noise: NoiseModel) -> PreparedUnion:
    """Prepare the single subspace spanned by all bases of the union."""
    return prepare(UnionModel(subspaces=(direct_sum(model),)), noise)
