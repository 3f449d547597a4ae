from enum import Enum
from typing import Optional

import numpy as np
from pydantic import Field, field_validator, model_validator

from uosdetect.errors import (
    DimensionMismatch,
    DomainError,
    NotSymmetric,
    TooFewSamples,
)
from uosdetect.utilities.general import UoSModel, frozen_array

SYMMETRY_TOLERANCE = 1e-10


class NoiseRegime(str, Enum):
    """How much of the noise distribution N(0, sigma^2 R) the detector knows."""

    KNOWN = "known"
    UNKNOWN_COVARIANCE = "unknown-covariance"
    UNKNOWN_STATISTICS = "unknown-statistics"

    @property
    def uses_training(self) -> bool:
        return self is not NoiseRegime.KNOWN

    @property
    def uses_sigma2(self) -> bool:
        return self is not NoiseRegime.UNKNOWN_STATISTICS


class Whitener(UoSModel):
    """A symmetric inverse square root R^{-1/2} (or Sigma^{-1/2})."""

    inv_sqrt: np.ndarray
    source_hash: str

    @field_validator("inv_sqrt", mode="before")
    @classmethod
    def _coerce(cls, v):
        return frozen_array(v, ndim=2, name="inv_sqrt")

    @model_validator(mode="after")
    def _check_symmetric(self):
        m, m2 = self.inv_sqrt.shape
        if m != m2:
            raise DimensionMismatch(f"inv_sqrt must be square, got {(m, m2)}")
        if np.max(np.abs(self.inv_sqrt - self.inv_sqrt.T)) > SYMMETRY_TOLERANCE:
            raise NotSymmetric("inv_sqrt is not symmetric")
        return self

    @property
    def ambient_dim(self) -> int:
        return self.inv_sqrt.shape[0]


class NoiseModel(UoSModel):
    """
    The detector's view of the noise.

    - `KNOWN`: `sigma2` and the SPD `covariance` R are given.
    - `UNKNOWN_COVARIANCE`: `sigma2` is given, R is estimated from the m x N0
      `training_samples` (one sample per column).
    - `UNKNOWN_STATISTICS`: only `training_samples` are given.
    """

    regime: NoiseRegime
    sigma2: Optional[float] = Field(default=None, gt=0)
    covariance: Optional[np.ndarray] = None
    training_samples: Optional[np.ndarray] = None

    @field_validator("covariance", "training_samples", mode="before")
    @classmethod
    def _coerce(cls, v, info):
        if v is None:
            return None
        return frozen_array(v, ndim=2, name=info.field_name)

    @model_validator(mode="after")
    def _check_regime(self):
        from uosdetect.noise.linalg import check_spd, eig_sym

        if self.regime.uses_sigma2 and self.sigma2 is None:
            raise DomainError(f"The {self.regime.value} regime needs sigma2")

        if self.regime is NoiseRegime.KNOWN:
            if self.covariance is None:
                raise DomainError("The known regime needs a covariance matrix")
            if self.covariance.shape[0] != self.covariance.shape[1]:
                raise DimensionMismatch(
                    f"covariance must be square, got {self.covariance.shape}"
                )
            eigenvalues, _ = eig_sym(self.covariance, tolerance=SYMMETRY_TOLERANCE)
            check_spd(eigenvalues)
        else:
            if self.training_samples is None:
                raise DomainError(f"The {self.regime.value} regime needs training samples")
            m, n0 = self.training_samples.shape
            if n0 <= m:
                raise TooFewSamples(
                    f"N0 = {n0} training samples do not exceed m = {m}"
                )
        return self

    @property
    def ambient_dim(self) -> int:
        if self.covariance is not None:
            return self.covariance.shape[0]
        return self.training_samples.shape[0]

    @property
    def n0(self) -> Optional[int]:
        if self.training_samples is None:
            return None
        return self.training_samples.shape[1]
