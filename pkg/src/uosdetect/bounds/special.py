"""Special functions behind the probability bounds."""

import numpy as np
import scipy.special
import scipy.stats

from uosdetect.errors import ConvergenceError, DomainError

# Poisson mass left out of the noncentral series
RESIDUAL_MASS = 1e-14
MAX_TERMS = 1_000_000


def _as_output(value: np.ndarray):
    return float(value) if np.ndim(value) == 0 else value


def chi2_sf(n: int, t: float) -> float:
    """Pr(chi2_n > t) as the regularized upper incomplete gamma Q(n/2, t/2)."""
    if n < 1:
        raise DomainError(f"Degrees of freedom must be >= 1, got {n}")
    if t < 0:
        raise DomainError(f"Tail point must be >= 0, got {t}")
    return float(scipy.special.gammaincc(n / 2, t / 2))


def noncentral_chi2_sf(n: int, delta, t: float):
    """
    Pr(chi2_n(delta) > t) as the Poisson mixture
    sum_j Pois(j; delta/2) chi2_sf(n + 2j, t), truncated once the remaining
    Poisson mass drops below `RESIDUAL_MASS`. `delta` may be an array; the
    chi2 tails are shared by every element.
    """
    deltas = np.asarray(delta, dtype=float)
    if np.any(deltas < 0):
        raise DomainError(f"Noncentrality must be >= 0, got {np.min(deltas)}")
    central = chi2_sf(n, t)
    if not np.any(deltas > 0):
        return _as_output(np.full(deltas.shape, central))

    mean = deltas / 2
    last = int(scipy.stats.poisson.isf(RESIDUAL_MASS, np.max(mean)))
    if last + 1 > MAX_TERMS:
        raise ConvergenceError(
            f"Noncentral series needs {last + 1} terms for delta = {np.max(deltas)}"
        )
    j = np.arange(last + 1)
    log_weights = (
        scipy.special.xlogy(j, mean[..., None]) - mean[..., None] - scipy.special.gammaln(j + 1)
    )
    tails = scipy.special.gammaincc(n / 2 + j, t / 2)
    return _as_output(np.clip(np.exp(log_weights) @ tails, 0.0, 1.0))


def psi(n: int, eta0: float, alpha):
    """
    sqrt(2) / (2^n Gamma(n/2)) (eta0 alpha)^((n-1)/2) K_{(n-1)/2}(eta0 alpha / 2),
    evaluated in log space with the exponentially scaled Bessel function.
    `alpha` may be an array.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if not 0 < eta0 < 0.5:
        raise DomainError(f"eta0 must lie in (0, 1/2), got {eta0}")
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha <= 0):
        raise DomainError("alpha must be positive")

    x = eta0 * alpha
    nu = (n - 1) / 2
    log_value = (
        0.5 * np.log(2)
        - n * np.log(2)
        - scipy.special.gammaln(n / 2)
        + nu * np.log(x)
        + np.log(scipy.special.kve(nu, x / 2))
        - x / 2
    )
    return _as_output(np.exp(log_value))


def gaussian_q(x):
    """Gaussian tail Q(x) = erfc(x / sqrt(2)) / 2."""
    return _as_output(0.5 * scipy.special.erfc(np.asarray(x, dtype=float) / np.sqrt(2)))
