from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from uosdetect.detect.glrt import quadratic_energies, regime_statistics
from uosdetect.noise import NoiseRegime


@dataclass(frozen=True)
class TrialBatch:
    """
    Detector outputs for a block of Monte-Carlo trials, one row per trial.

    `classes` holds the active subspace of each trial, or -1 for noise-only
    trials. `signal_energy` is the squared norm of the signal whitened with the
    true covariance.
    """

    regime: NoiseRegime
    subspace_dim: int
    sigma2: float
    classes: np.ndarray
    energies: np.ndarray
    norms: np.ndarray
    statistics: np.ndarray
    signal_energy: np.ndarray
    whitened_signals: np.ndarray
    khat: np.ndarray = field(init=False)
    statistic: np.ndarray = field(init=False)

    def __post_init__(self):
        khat = np.argmax(self.energies, axis=1)
        object.__setattr__(self, "khat", khat)
        object.__setattr__(
            self, "statistic", self.statistics[np.arange(len(khat)), khat]
        )

    def __len__(self) -> int:
        return len(self.classes)

    @property
    def n_subspaces(self) -> int:
        return self.energies.shape[1]

    def detected(self, gamma_bar: float) -> np.ndarray:
        return self.statistic > gamma_bar

    def correct(self, gamma_bar: float) -> np.ndarray:
        return self.detected(gamma_bar) & (self.khat == self.classes)

    def subset(self, mask: np.ndarray) -> "TrialBatch":
        return TrialBatch(
            regime=self.regime,
            subspace_dim=self.subspace_dim,
            sigma2=self.sigma2,
            classes=self.classes[mask],
            energies=self.energies[mask],
            norms=self.norms[mask],
            statistics=self.statistics[mask],
            signal_energy=self.signal_energy[mask],
            whitened_signals=self.whitened_signals[mask],
        )

    def for_class(self, k: int) -> "TrialBatch":
        return self.subset(self.classes == k)

    @classmethod
    def concatenate(cls, batches: Sequence["TrialBatch"]) -> "TrialBatch":
        first = batches[0]
        return cls(
            regime=first.regime,
            subspace_dim=first.subspace_dim,
            sigma2=first.sigma2,
            classes=np.concatenate([b.classes for b in batches]),
            energies=np.concatenate([b.energies for b in batches]),
            norms=np.concatenate([b.norms for b in batches]),
            statistics=np.concatenate([b.statistics for b in batches]),
            signal_energy=np.concatenate([b.signal_energy for b in batches]),
            whitened_signals=np.concatenate([b.whitened_signals for b in batches]),
        )


def evaluate_observations(
    regime: NoiseRegime,
    projectors: np.ndarray,
    whitened: np.ndarray,
    sigma2: float,
    n0: Optional[int],
    subspace_dim: int,
    classes: np.ndarray,
    whitened_signals: np.ndarray,
) -> TrialBatch:
    """
    Evaluate the regime's rule on whitened observations of shape (T, m) with
    shared (K0, m, m) or per-trial (T, K0, m, m) projectors.
    """
    energies = quadratic_energies(projectors, whitened)
    norms = np.einsum("ti,ti->t", whitened, whitened)
    return TrialBatch(
        regime=regime,
        subspace_dim=subspace_dim,
        sigma2=sigma2,
        classes=classes,
        energies=energies,
        norms=norms,
        statistics=regime_statistics(regime, energies, norms, sigma2, n0),
        signal_energy=np.einsum("ti,ti->t", whitened_signals, whitened_signals),
        whitened_signals=whitened_signals,
    )
