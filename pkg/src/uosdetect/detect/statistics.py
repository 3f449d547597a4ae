"""Quadratic-form ratios the decision rules are written in."""

import numpy as np

from uosdetect.errors import DimensionMismatch, DivisionByZero, DomainError


def _quad(z: np.ndarray, p: np.ndarray) -> float:
    if p.shape != (len(z), len(z)):
        raise DimensionMismatch(f"Cannot apply a {p.shape} matrix to length {len(z)}")
    return float(z @ p @ z)


def stat_quad(z, p) -> float:
    """z'Pz / z'z."""
    z = np.asarray(z, dtype=float)
    norm = float(z @ z)
    if norm == 0:
        raise DivisionByZero("z'z is zero")
    return _quad(z, np.asarray(p, dtype=float)) / norm


def stat_quad_over_const(z, p, eta: float) -> float:
    """z'Pz / eta."""
    if eta <= 0:
        raise DomainError(f"eta must be positive, got {eta}")
    z = np.asarray(z, dtype=float)
    return _quad(z, np.asarray(p, dtype=float)) / eta


def stat_ratio(z, p, q) -> float:
    """z'Pz / z'Qz."""
    z = np.asarray(z, dtype=float)
    denominator = _quad(z, np.asarray(q, dtype=float))
    if denominator == 0:
        raise DivisionByZero("z'Qz is zero")
    return _quad(z, np.asarray(p, dtype=float)) / denominator


def stat_quad_over_const_plus_norm(z, p, eta: float) -> float:
    """z'Pz / (eta + z'z)."""
    if eta <= 0:
        raise DomainError(f"eta must be positive, got {eta}")
    z = np.asarray(z, dtype=float)
    return _quad(z, np.asarray(p, dtype=float)) / (eta + float(z @ z))
