import numpy as np
import pytest

from uosdetect.detect import (
    stat_quad,
    stat_quad_over_const,
    stat_quad_over_const_plus_norm,
    stat_ratio,
)
from uosdetect.errors import DimensionMismatch, DivisionByZero, DomainError

P1 = np.diag([1.0, 0.0, 0.0])
P2 = np.diag([0.0, 1.0, 0.0])
Z = np.array([3.0, 4.0, 0.0])


def test_stat_quad():
    assert stat_quad(Z, P1) == pytest.approx(9 / 25)
    with pytest.raises(DivisionByZero):
        stat_quad(np.zeros(3), P1)


def test_stat_quad_over_const():
    assert stat_quad_over_const(Z, P2, 2.0) == pytest.approx(8.0)
    with pytest.raises(DomainError):
        stat_quad_over_const(Z, P2, 0.0)


def test_stat_ratio():
    assert stat_ratio(Z, P1, P2) == pytest.approx(9 / 16)
    with pytest.raises(DivisionByZero):
        stat_ratio(np.array([1.0, 0.0, 0.0]), P1, P2)


def test_stat_quad_over_const_plus_norm():
    assert stat_quad_over_const_plus_norm(Z, P2, 5.0) == pytest.approx(16 / 30)
    with pytest.raises(DomainError):
        stat_quad_over_const_plus_norm(Z, P2, -1.0)


def test_shape_mismatch():
    with pytest.raises(DimensionMismatch):
        stat_quad(Z, np.eye(2))
