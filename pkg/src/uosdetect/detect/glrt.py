from typing import Optional

import numpy as np
from pydantic import field_validator, model_validator

from uosdetect.detect.prepared import PreparedUnion
from uosdetect.detect.statistics import (
    stat_quad,
    stat_quad_over_const,
    stat_quad_over_const_plus_norm,
)
from uosdetect.errors import (
    DimensionMismatch,
    DivisionByZero,
    DomainError,
    RankDeficient,
    RegimeMismatch,
)
from uosdetect.noise import NoiseRegime
from uosdetect.utilities.general import UoSModel, frozen_array


class DetectionOutcome(UoSModel):
    """
    The result of one GLRT evaluation. The same outcome answers signal
    detection (`signal_detected`) and active subspace detection
    (`active_subspace`), since both rules select `khat` the same way.
    """

    energies: np.ndarray
    khat: int
    statistic: float
    threshold: float
    signal_detected: bool
    active_subspace: Optional[int] = None
    classifies: bool = True

    @field_validator("energies", mode="before")
    @classmethod
    def _coerce(cls, v):
        return frozen_array(v, ndim=1, name="energies")

    @model_validator(mode="after")
    def _check_decision(self):
        if self.khat != int(np.argmax(self.energies)):
            raise DomainError("khat must be the first index of the largest energy")
        if self.signal_detected != (self.statistic > self.threshold):
            raise DomainError("signal_detected must equal statistic > threshold")
        expected = self.khat if (self.signal_detected and self.classifies) else None
        if self.active_subspace != expected:
            raise DomainError("active_subspace must be khat exactly when a signal is detected")
        return self


def quadratic_energies(projectors: np.ndarray, z: np.ndarray) -> np.ndarray:
    """
    z'P_k z for observations `z` of shape (T, m) against projectors of shape
    (K0, m, m) or per-observation projectors (T, K0, m, m). Returns (T, K0),
    clipped to [0, z'z].
    """
    if projectors.ndim == 3:
        energies = np.einsum("ti,kij,tj->tk", z, projectors, z)
    else:
        energies = np.einsum("ti,tkij,tj->tk", z, projectors, z)
    norms = np.einsum("ti,ti->t", z, z)
    return np.clip(energies, 0.0, norms[:, None])


def regime_statistics(
    regime: NoiseRegime,
    energies: np.ndarray,
    norms: np.ndarray,
    sigma2: Optional[float],
    n0: Optional[int],
) -> np.ndarray:
    """
    Per-subspace statistics for every observation:

    - known: z'P_k z / (2 sigma^2)
    - unknown covariance: z'P_k z / (N0 sigma^2 + z'z)
    - unknown statistics: z'P_k z / z'z
    """
    if regime is NoiseRegime.KNOWN:
        return energies / (2 * sigma2)
    if regime is NoiseRegime.UNKNOWN_COVARIANCE:
        return energies / (n0 * sigma2 + norms)[:, None]
    if np.any(norms == 0):
        raise DivisionByZero("The unknown-statistics rule is undefined for y = 0")
    return energies / norms[:, None]


def _observation(prep: PreparedUnion, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape != (prep.ambient_dim,):
        raise DimensionMismatch(
            f"Observation of shape {y.shape} does not live in R^{prep.ambient_dim}"
        )
    return y


def _statistic(prep: PreparedUnion, z: np.ndarray, projector: np.ndarray) -> float:
    if prep.regime is NoiseRegime.KNOWN:
        value = stat_quad_over_const(z, projector, 2 * prep.sigma2)
    elif prep.regime is NoiseRegime.UNKNOWN_COVARIANCE:
        value = stat_quad_over_const_plus_norm(z, projector, prep.n0 * prep.sigma2)
    else:
        value = min(stat_quad(z, projector), 1.0)
    return max(value, 0.0)


def _evaluate(
    prep: PreparedUnion, y, gamma_bar: float, classifies: bool = True
) -> DetectionOutcome:
    z = prep.whitener.inv_sqrt @ _observation(prep, y)
    energies = quadratic_energies(prep.projectors, z[None, :])
    khat = int(np.argmax(energies[0]))
    statistic = _statistic(prep, z, prep.projectors[khat])
    detected = statistic > gamma_bar
    return DetectionOutcome(
        energies=energies[0],
        khat=khat,
        statistic=statistic,
        threshold=gamma_bar,
        signal_detected=detected,
        active_subspace=khat if (detected and classifies) else None,
        classifies=classifies,
    )


def _require(prep: PreparedUnion, regime: NoiseRegime) -> None:
    if prep.regime is not regime:
        raise RegimeMismatch(
            f"Detector for the {regime.value} regime got a {prep.regime.value} union"
        )


def glrt_known(prep: PreparedUnion, y, gamma_bar: float) -> DetectionOutcome:
    """Known sigma^2 and R: statistic z'P_khat z / (2 sigma^2) with z = R^{-1/2} y."""
    _require(prep, NoiseRegime.KNOWN)
    return _evaluate(prep, y, gamma_bar)


def glrt_unknown_cov(prep: PreparedUnion, y, gamma_bar: float) -> DetectionOutcome:
    """Known sigma^2, R estimated: statistic z'P_khat z / (N0 sigma^2 + z'z) with z = Sigma^{-1/2} y."""
    _require(prep, NoiseRegime.UNKNOWN_COVARIANCE)
    return _evaluate(prep, y, gamma_bar)


def glrt_unknown_stats(prep: PreparedUnion, y, gamma_bar: float) -> DetectionOutcome:
    """sigma^2 and R unknown: statistic z'P_khat z / z'z with z = Sigma^{-1/2} y."""
    _require(prep, NoiseRegime.UNKNOWN_STATISTICS)
    return _evaluate(prep, y, gamma_bar)


_DETECTORS = {
    NoiseRegime.KNOWN: glrt_known,
    NoiseRegime.UNKNOWN_COVARIANCE: glrt_unknown_cov,
    NoiseRegime.UNKNOWN_STATISTICS: glrt_unknown_stats,
}


def detect(prep: PreparedUnion, y, gamma_bar: float) -> DetectionOutcome:
    """Run the decision rule matching the prepared union's regime."""
    return _DETECTORS[prep.regime](prep, y, gamma_bar)


def baseline_directsum(prep: PreparedUnion, y, gamma_bar: float) -> DetectionOutcome:
    """
    Classical subspace detector on the direct sum of all bases. `prep` must be
    built by `prepare_direct_sum`; the outcome never names an active subspace.
    """
    if prep.n_subspaces != 1:
        raise DimensionMismatch(
            f"The direct-sum detector needs a single prepared subspace, got {prep.n_subspaces}"
        )
    return _evaluate(prep, y, gamma_bar, classifies=False)


def ml_coefficients(prep: PreparedUnion, y, k: int) -> np.ndarray:
    """
    theta_k = (H_k' R^{-1} H_k)^{-1} H_k' R^{-1} y, solved as a least-squares
    problem in the whitened domain (Sigma replaces R in the unknown regimes).
    """
    if not 0 <= k < prep.n_subspaces:
        raise DomainError(f"Subspace index {k} outside 0..{prep.n_subspaces - 1}")
    z = prep.whitener.inv_sqrt @ _observation(prep, y)
    g = prep.whitener.inv_sqrt @ prep.bases[k]
    theta, _, rank, _ = np.linalg.lstsq(g, z, rcond=None)
    if rank < prep.subspace_dim:
        raise RankDeficient(f"Whitened basis {k} has rank {rank}")
    return theta
