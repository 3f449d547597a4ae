import numpy as np
import pytest

from uosdetect.errors import DimensionMismatch, NotOrthogonal, RankDeficient
from uosdetect.geometry import (
    Subspace,
    complement_projector,
    learn_basis_svd,
    orthonormalize,
    projector,
)


def test_orthonormalize_spans_raw_columns(rng):
    raw = rng.standard_normal((5, 2))
    s = orthonormalize(raw)
    assert s.ambient_dim == 5
    assert s.dim == 2
    assert np.allclose(s.basis.T @ s.basis, np.eye(2), atol=1e-12)
    assert np.allclose(projector(s) @ raw, raw, atol=1e-10)


def test_orthonormalize_is_sign_canonical(rng):
    raw = rng.standard_normal((6, 3))
    assert np.allclose(orthonormalize(raw).basis, orthonormalize(-raw).basis)


def test_orthonormalize_rank_deficient():
    a = np.array([1.0, 2.0, 3.0, 4.0])
    with pytest.raises(RankDeficient):
        orthonormalize(np.column_stack([a, 2 * a]))


def test_orthonormalize_too_many_columns(rng):
    with pytest.raises(RankDeficient):
        orthonormalize(rng.standard_normal((3, 4)))


def test_subspace_rejects_non_orthonormal_basis():
    with pytest.raises(NotOrthogonal):
        Subspace(basis=[[1.0, 1.0], [0.0, 1.0], [0.0, 0.0]])


def test_subspace_rejects_wide_basis():
    with pytest.raises(DimensionMismatch):
        Subspace(basis=np.eye(3)[:2])


def test_basis_is_read_only():
    s = Subspace(basis=np.eye(4)[:, :2])
    with pytest.raises(ValueError):
        s.basis[0, 0] = 2.0


def test_projector_identities(rng):
    s = orthonormalize(rng.standard_normal((7, 3)))
    p = projector(s)
    q = complement_projector(s)
    assert np.max(np.abs(p @ p - p)) < 1e-10
    assert np.max(np.abs(p - p.T)) < 1e-10
    assert np.max(np.abs(p + q - np.eye(7))) < 1e-10
    assert np.max(np.abs(p @ s.basis - s.basis)) < 1e-10
    assert np.max(np.abs(q @ s.basis)) < 1e-10
    assert np.trace(p) == pytest.approx(3)


class TestLearnBasis:
    def test_recovers_span(self, rng):
        samples = np.zeros((5, 10))
        samples[:2] = rng.standard_normal((2, 10))
        s = learn_basis_svd(samples, 2)
        assert np.allclose(projector(s), np.diag([1.0, 1.0, 0.0, 0.0, 0.0]), atol=1e-10)

    def test_keeps_leading_directions(self, rng):
        samples = rng.standard_normal((4, 200)) * np.array([[10.0], [3.0], [0.1], [0.1]])
        s = learn_basis_svd(samples, 2)
        assert np.allclose(np.abs(s.basis[:2]), np.eye(2), atol=0.1)

    def test_too_few_samples(self, rng):
        with pytest.raises(RankDeficient):
            learn_basis_svd(rng.standard_normal((4, 1)), 2)

    def test_rank_deficient_samples(self):
        a = np.array([[1.0], [2.0], [0.0], [1.0]])
        with pytest.raises(RankDeficient):
            learn_basis_svd(a * np.arange(1, 6), 2)

    def test_dimension_out_of_range(self, rng):
        with pytest.raises(DimensionMismatch):
            learn_basis_svd(rng.standard_normal((3, 10)), 4)
