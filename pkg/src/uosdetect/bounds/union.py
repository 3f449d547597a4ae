from typing import Optional, Sequence, Union

import numpy as np
from pydantic import field_validator

from uosdetect.bounds.events import EventProbabilities
from uosdetect.bounds.special import chi2_sf, gaussian_q, noncentral_chi2_sf, psi
from uosdetect.detect import PreparedUnion, quadratic_energies
from uosdetect.errors import DegenerateJoint, DimensionMismatch, DomainError
from uosdetect.noise import NoiseRegime
from uosdetect.utilities.general import UoSModel, frozen_array

Probabilities = Union[EventProbabilities, Sequence[float], np.ndarray]


def _marginals(probabilities: Probabilities) -> np.ndarray:
    if isinstance(probabilities, EventProbabilities):
        return probabilities.marginals
    return np.asarray(probabilities, dtype=float)


def pfa_union_bound(probabilities: Probabilities) -> float:
    """min{1, sum_k P(A_k)} for the per-subspace false alarm events."""
    return float(min(1.0, np.sum(_marginals(probabilities))))


def pfa_union_bound_known(n_subspaces: int, subspace_dim: int, gamma_bar: float) -> float:
    """Known regime: each w'P_k w / sigma^2 is chi2_n, so the terms are chi2_sf(n, 2 gamma_bar)."""
    return float(min(1.0, n_subspaces * chi2_sf(subspace_dim, 2 * gamma_bar)))


def _de_caen(probabilities: EventProbabilities) -> float:
    total = 0.0
    for i, p in enumerate(probabilities.marginals):
        if p == 0:
            continue
        denominator = float(np.sum(probabilities.joints[i]))
        if denominator <= 0:
            raise DegenerateJoint(f"Event {i} has P = {p} but zero joint mass")
        total += p * p / denominator
    return total


def pd_bounds(
    per_class: Sequence[EventProbabilities], priors: Sequence[float]
) -> tuple[float, float]:
    """
    Upper (union) and lower (de Caen) bounds on P_D from the threshold events
    of each active class.
    """
    if len(per_class) != len(priors):
        raise DimensionMismatch(f"{len(per_class)} classes but {len(priors)} priors")
    upper = sum(prior * min(1.0, float(np.sum(p.marginals))) for p, prior in zip(per_class, priors))
    lower = sum(prior * min(1.0, _de_caen(p)) for p, prior in zip(per_class, priors))
    return float(np.clip(upper, 0.0, 1.0)), float(np.clip(lower, 0.0, 1.0))


def pd_lower_union(
    per_class: Sequence[EventProbabilities], priors: Sequence[float]
) -> float:
    """sum_k prior_k max_i P_k(A_i): a union is at least as likely as any member."""
    value = sum(prior * float(np.max(p.marginals)) for p, prior in zip(per_class, priors))
    return float(np.clip(value, 0.0, 1.0))


def pc_lower_frechet(probabilities: Probabilities) -> float:
    """
    max{0, P(T_k > gamma_bar) + sum_{j != k} P(T_z(P_k, P_j) > 1) - (K0 - 1)}.
    Takes the K0 ratio-event marginals of one class (detection event in slot k).
    """
    marginals = _marginals(probabilities)
    return float(np.clip(np.sum(marginals) - (len(marginals) - 1), 0.0, 1.0))


def bessel_bound_samples(
    energies: np.ndarray,
    norms: np.ndarray,
    k: int,
    sigma2: float,
    subspace_dim: int,
    detection_prob: float,
    eta0: float = 0.25,
) -> np.ndarray:
    """
    Per-trial Bessel lower bound on P_{H_k}(H_k):
    max{0, P(T > gamma_bar) - sum_{j != k} [Q((1 - 2 eta0) sqrt(lambda_j) / 2) + Psi(n, eta0, lambda_j)]}
    with lambda_j = z'(I - P_j)z / sigma^2. Trials where some lambda_j is zero
    bound to 0.
    """
    if not 0 < eta0 < 0.5:
        raise DomainError(f"eta0 must lie in (0, 1/2), got {eta0}")
    lam = (norms[:, None] - energies) / sigma2
    lam = np.delete(lam, k, axis=1)
    degenerate = np.any(lam <= 0, axis=1)
    safe = np.where(lam > 0, lam, 1.0)
    penalty = gaussian_q(0.5 * (1 - 2 * eta0) * np.sqrt(safe)) + psi(subspace_dim, eta0, safe)
    bound = np.clip(detection_prob - np.sum(penalty, axis=1), 0.0, 1.0)
    bound[degenerate] = 0.0
    return bound


class BesselBound(UoSModel):
    mean: float
    p05: float
    p95: float
    samples: np.ndarray

    @field_validator("samples", mode="before")
    @classmethod
    def _coerce(cls, v):
        return frozen_array(v, ndim=1, name="samples")

    @classmethod
    def from_samples(cls, samples: np.ndarray) -> "BesselBound":
        if len(samples) == 0:
            return cls(mean=0.0, p05=0.0, p95=0.0, samples=samples)
        return cls(
            mean=float(np.mean(samples)),
            p05=float(np.percentile(samples, 5)),
            p95=float(np.percentile(samples, 95)),
            samples=samples,
        )


def pc_lower_bessel(
    prep: PreparedUnion,
    k: int,
    z,
    detection_prob: float,
    eta0: float = 0.25,
    sigma2: Optional[float] = None,
) -> BesselBound:
    """
    Bessel lower bound for class k evaluated on whitened observations `z`
    (one row per trial with the signal in subspace k), summarized by the mean
    and the 5th/95th percentiles across trials.
    """
    if not 0 <= k < prep.n_subspaces:
        raise DomainError(f"Class {k} outside 0..{prep.n_subspaces - 1}")
    sigma2 = sigma2 if sigma2 is not None else prep.sigma2
    if sigma2 is None:
        raise DomainError("The Bessel bound needs sigma2")
    z = np.atleast_2d(np.asarray(z, dtype=float))
    energies = quadratic_energies(prep.projectors, z)
    norms = np.einsum("ti,ti->t", z, z)
    samples = bessel_bound_samples(
        energies, norms, k, sigma2, prep.subspace_dim, detection_prob, eta0
    )
    return BesselBound.from_samples(samples)


def known_detection_marginals(
    prep: PreparedUnion, whitened_signals, gamma_bar: float
) -> np.ndarray:
    """
    Known regime: given the whitened signal x, z'P_i z / sigma^2 is noncentral
    chi2_n with delta = x'P_i x / sigma^2, so P(T_i > gamma_bar) is the
    average of noncentral_chi2_sf(n, delta, 2 gamma_bar) over the signals.
    """
    if prep.regime is not NoiseRegime.KNOWN:
        raise DomainError("Analytic marginals exist only for the known regime")
    signals = np.atleast_2d(np.asarray(whitened_signals, dtype=float))
    deltas = quadratic_energies(prep.projectors, signals) / prep.sigma2
    tails = noncentral_chi2_sf(prep.subspace_dim, deltas, 2 * gamma_bar)
    return np.asarray(tails).mean(axis=0)
