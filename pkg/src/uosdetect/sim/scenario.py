from typing import Any, Optional

import numpy as np
from pydantic import Field, field_validator, model_validator

from uosdetect.detect import DetectionOutcome
from uosdetect.errors import DimensionMismatch, DomainError, TooFewSamples
from uosdetect.geometry import Subspace, UnionModel, rotated_subspace
from uosdetect.noise import NoiseModel, NoiseRegime
from uosdetect.noise.linalg import check_spd, eig_sym
from uosdetect.utilities.general import UoSModel, frozen_array, hash_objects

# S1 and S3 are isoclinic at this angle in the reference union
REFERENCE_S3_ANGLE = 1.2
REFERENCE_S2_ANGLE = 0.6


def isoclinic_subspace(phi: float, psi: float) -> Subspace:
    """
    span{q, q i} in R^4 = H for the unit quaternion
    q = cos(phi) + sin(phi) (cos(psi) j + sin(psi) k), with (1, i, j, k) = (e1, ..., e4).
    Every such plane makes equal principal angles phi with span{e1, e2}, and
    any two of them are isoclinic, at half the great-circle distance between
    the points (2 phi, psi) of the sphere in colatitude and longitude.
    """
    eye = np.eye(4)
    c, s = np.cos(psi), np.sin(psi)
    twist = np.array([[c, s], [s, -c]])
    return rotated_subspace(Subspace(basis=eye[:, :2]), (phi, phi), eye[:, 2:] @ twist)


def reference_path(phi: float, s3_angle: float = REFERENCE_S3_ANGLE) -> Subspace:
    """
    The swept second subspace of the reference union: equal angles `phi` to
    S1, moving along the half circle of the sphere centred halfway between S1
    and S3. It leaves S1 at phi = 0 and reaches S3 at phi = s3_angle, so the
    summed angles to S1 and S3 first grow and then shrink.
    """
    if not 0 <= phi <= s3_angle:
        raise DomainError(f"The reference path runs over [0, {s3_angle}], got {phi}")
    c2 = np.cos(s3_angle) ** 2
    cos_tau = float(np.clip((np.cos(2 * phi) - c2) / (1 - c2), -1.0, 1.0))
    psi = np.arctan2(np.sqrt(1 - cos_tau**2), np.cos(s3_angle) * (1 - cos_tau))
    return isoclinic_subspace(phi, psi)


def reference_union(phi: float = REFERENCE_S2_ANGLE) -> UnionModel:
    """
    Three 2-dimensional subspaces of R^4, pairwise isoclinic: S1 = span{e1, e2},
    S3 at angle 1.2 from S1 and S2 = `reference_path(phi)` between them.
    """
    return UnionModel(
        subspaces=(
            isoclinic_subspace(0.0, 0.0),
            reference_path(phi),
            isoclinic_subspace(REFERENCE_S3_ANGLE, 0.0),
        )
    )


class Scenario(UoSModel):
    """
    A Monte-Carlo experiment: the union, the true noise N(0, sigma^2 R), the
    detector's regime and the signal law (SNR, class priors).
    """

    union: UnionModel
    sigma2: float = Field(default=1.0, gt=0)
    covariance: Optional[np.ndarray] = None
    regime: NoiseRegime = NoiseRegime.KNOWN
    n0: Optional[int] = None
    snr_db: float = 10.0
    class_priors: Optional[np.ndarray] = None
    trials: int = Field(default=10_000, ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)

    @field_validator("covariance", mode="before")
    @classmethod
    def _coerce_covariance(cls, v):
        return None if v is None else frozen_array(v, ndim=2, name="covariance")

    @field_validator("class_priors", mode="before")
    @classmethod
    def _coerce_priors(cls, v):
        return None if v is None else frozen_array(v, ndim=1, name="class_priors")

    @model_validator(mode="after")
    def _check(self):
        m = self.union.ambient_dim
        if self.covariance is not None:
            if self.covariance.shape != (m, m):
                raise DimensionMismatch(
                    f"covariance must be {m}x{m}, got {self.covariance.shape}"
                )
            check_spd(eig_sym(self.covariance)[0])
        if self.class_priors is not None:
            if self.class_priors.shape != (self.union.n_subspaces,):
                raise DimensionMismatch("One class prior is needed per subspace")
            if np.any(self.class_priors < 0) or abs(self.class_priors.sum() - 1) > 1e-12:
                raise DomainError("class_priors must be a probability vector")
        if self.regime.uses_training:
            if self.n0 is None:
                raise DomainError(f"The {self.regime.value} regime needs n0")
            if self.n0 <= m:
                raise TooFewSamples(f"N0 = {self.n0} training samples do not exceed m = {m}")
        return self

    @property
    def priors(self) -> np.ndarray:
        if self.class_priors is None:
            k0 = self.union.n_subspaces
            return np.full(k0, 1.0 / k0)
        return self.class_priors

    @property
    def noise_covariance(self) -> np.ndarray:
        if self.covariance is None:
            return np.eye(self.union.ambient_dim)
        return self.covariance

    @property
    def snr_linear(self) -> float:
        return 10 ** (self.snr_db / 10)

    @property
    def scenario_id(self) -> str:
        return hash_objects(
            (
                self.union.bases,
                self.sigma2,
                self.noise_covariance,
                self.regime.value,
                self.n0,
                self.snr_db,
                self.priors,
                self.trials,
                self.seed,
            )
        )

    def truth(self) -> NoiseModel:
        return NoiseModel(
            regime=NoiseRegime.KNOWN,
            sigma2=self.sigma2,
            covariance=self.noise_covariance,
        )

    def replace(self, **changes: Any) -> "Scenario":
        """A validated copy with some fields changed."""
        return type(self)(**{**dict(self), **changes})


class TrialRecord(UoSModel):
    """One trial: `hypothesis` is 0 for noise only, k for a signal in subspace k - 1."""

    trial_id: int
    hypothesis: int = Field(ge=0)
    outcome: DetectionOutcome
    whitened_signal_energy: float

    @property
    def active_class(self) -> Optional[int]:
        return None if self.hypothesis == 0 else self.hypothesis - 1


class TrialSummary(UoSModel):
    """Empirical P_FA, P_D and P_C with standard errors, overall and per class."""

    gamma_bar: float
    pfa: float
    pfa_se: float
    pd: float
    pd_se: float
    pc: float
    pc_se: float
    null_trials: int
    signal_trials: int
    class_counts: tuple[int, ...]
    class_pd: np.ndarray
    class_pd_se: np.ndarray
    class_pc: np.ndarray
    class_pc_se: np.ndarray

    @field_validator("class_pd", "class_pd_se", "class_pc", "class_pc_se", mode="before")
    @classmethod
    def _coerce(cls, v, info):
        return frozen_array(v, ndim=1, name=info.field_name)

    @property
    def gap(self) -> float:
        return self.pd - self.pc


CURVE_COLUMNS = (
    "gamma_bar",
    "target_pfa",
    "pfa",
    "pfa_se",
    "pd",
    "pd_se",
    "pc",
    "pc_se",
    "pfa_ub",
    "pd_ub",
    "pd_lb",
    "pc_lb_frechet_mean",
    "pc_lb_bessel_mean",
    "pd_lb_union",
)


class CurvePoint(UoSModel):
    """One ROC sample with the bounds evaluated at its threshold."""

    gamma_bar: float
    target_pfa: Optional[float] = None
    pfa: float
    pfa_se: float
    pd: float
    pd_se: float
    pc: float
    pc_se: float
    pfa_ub: float
    pd_ub: float
    pd_lb: float
    pc_lb_frechet_mean: float
    pc_lb_bessel_mean: float
    pd_lb_union: float
    summary: TrialSummary

    @model_validator(mode="after")
    def _check_range(self):
        for name in CURVE_COLUMNS[2:]:
            if name.endswith("_se"):
                continue
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1]")
        return self

    def row(self) -> tuple:
        return tuple(
            "" if getattr(self, name) is None else getattr(self, name)
            for name in CURVE_COLUMNS
        )
