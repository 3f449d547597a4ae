import numpy as np

from uosdetect.errors import (
    DimensionMismatch,
    NearSingular,
    NotPositiveDefinite,
    NotSymmetric,
    TooFewSamples,
)
from uosdetect.noise.models import Whitener
from uosdetect.utilities.general import hash_objects
from uosdetect.utilities.logging import get_logger

logger = get_logger(__name__)

SYMMETRY_TOLERANCE = 1e-8
# minimum eigenvalue relative to the maximum
SPD_TOLERANCE = 1e-12


def _square(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"Expected a square matrix, got shape {a.shape}")
    return a


def eig_sym(a, tolerance: float = SYMMETRY_TOLERANCE) -> tuple[np.ndarray, np.ndarray]:
    """
    Eigendecomposition of a symmetric matrix with eigenvalues in nonincreasing
    order; column i of the second result is the eigenvector of eigenvalue i.
    """
    a = _square(a)
    asymmetry = np.max(np.abs(a - a.T), initial=0.0)
    if asymmetry >= tolerance:
        raise NotSymmetric(f"Matrix is not symmetric (max |A - A'| = {asymmetry:.3g})")
    eigenvalues, eigenvectors = np.linalg.eigh((a + a.T) / 2)
    return eigenvalues[::-1].copy(), eigenvectors[:, ::-1].copy()


def check_spd(eigenvalues: np.ndarray) -> None:
    """Raise unless nonincreasing `eigenvalues` describe an SPD matrix."""
    largest, smallest = eigenvalues[0], eigenvalues[-1]
    if largest <= 0 or smallest <= 0:
        raise NotPositiveDefinite(
            f"Matrix is not positive definite (min eigenvalue {smallest:.3g})"
        )
    if smallest < SPD_TOLERANCE * largest:
        raise NearSingular(
            f"Matrix is near singular (condition number {largest / smallest:.3g})"
        )
    logger.debug(f"SPD check passed, condition number {largest / smallest:.3g}")


def inverse_sqrt(a) -> Whitener:
    """The symmetric inverse square root Q diag(lambda^{-1/2}) Q'."""
    a = _square(a)
    eigenvalues, eigenvectors = eig_sym(a)
    check_spd(eigenvalues)
    w = (eigenvectors / np.sqrt(eigenvalues)) @ eigenvectors.T
    return Whitener(inv_sqrt=(w + w.T) / 2, source_hash=hash_objects((a,), len=16))


def sqrt_spd(a) -> np.ndarray:
    """The symmetric square root Q diag(lambda^{1/2}) Q'."""
    eigenvalues, eigenvectors = eig_sym(a)
    check_spd(eigenvalues)
    root = (eigenvectors * np.sqrt(eigenvalues)) @ eigenvectors.T
    return (root + root.T) / 2


def sample_covariance(training_samples) -> np.ndarray:
    """Sigma = Xi Xi' / N0 for an m x N0 matrix of noise-only samples."""
    xi = np.asarray(training_samples, dtype=float)
    if xi.ndim != 2:
        raise DimensionMismatch(f"Training samples must be a matrix, got shape {xi.shape}")
    m, n0 = xi.shape
    if n0 <= m:
        raise TooFewSamples(f"N0 = {n0} training samples do not exceed m = {m}")
    sigma = xi @ xi.T / n0
    return (sigma + sigma.T) / 2


def whiten(w: Whitener, v) -> np.ndarray:
    """Apply the whitener to a vector, or to every column of a matrix."""
    v = np.asarray(v, dtype=float)
    if v.shape[0] != w.ambient_dim or v.ndim > 2:
        raise DimensionMismatch(
            f"Cannot whiten shape {v.shape} with a {w.ambient_dim}x{w.ambient_dim} whitener"
        )
    return w.inv_sqrt @ v
