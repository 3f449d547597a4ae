from typing import Optional

import numpy as np

from uosdetect.errors import DomainError
from uosdetect.noise.linalg import sqrt_spd


def draw_noise(
    sigma2: float,
    root: np.ndarray,
    rng: np.random.Generator,
    size: Optional[int] = None,
) -> np.ndarray:
    """sigma R^{1/2} g for a precomputed symmetric root; `size` draws are rows."""
    m = root.shape[0]
    g = rng.standard_normal(m if size is None else (size, m))
    return np.sqrt(sigma2) * (g @ root)


def sample_noise(
    sigma2: float,
    covariance,
    rng: np.random.Generator,
    size: Optional[int] = None,
) -> np.ndarray:
    """
    Draw from N(0, sigma^2 R). Returns a length-m vector, or a (size, m) array
    of independent draws.
    """
    if sigma2 < 0:
        raise DomainError(f"sigma2 must be nonnegative, got {sigma2}")
    return draw_noise(sigma2, sqrt_spd(covariance), rng, size=size)


def random_spd_covariance(
    m: int, condition_target: float, rng: np.random.Generator
) -> np.ndarray:
    """
    Q diag(lambda) Q' with Q Haar-distributed orthogonal and the eigenvalues
    log-spaced from `condition_target` down to 1. A 1x1 covariance has
    condition number 1, so m = 1 accepts only `condition_target` = 1.
    """
    if m < 1:
        raise DomainError(f"m must be positive, got {m}")
    if condition_target < 1:
        raise DomainError(f"condition_target must be >= 1, got {condition_target}")
    if m == 1 and condition_target != 1:
        raise DomainError(f"A 1x1 covariance cannot have condition number {condition_target}")
    q, r = np.linalg.qr(rng.standard_normal((m, m)))
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    q = q * signs
    eigenvalues = np.geomspace(condition_target, 1.0, m)
    covariance = (q * eigenvalues) @ q.T
    return (covariance + covariance.T) / 2
