import numpy as np
import pytest

from uosdetect.errors import DomainError
from uosdetect.noise import NoiseRegime, eig_sym
from uosdetect.sim import (
    Scenario,
    angle_sweep,
    baseline_comparison,
    calibrate_thresholds,
    eigen_aligned_union,
    gap_experiment,
    n0_sweep,
    noise_geometry_experiment,
    reference_path,
    regime_comparison,
    roc_sweep,
)

GRID = [0.1, 0.3]


@pytest.fixture
def small(scenario) -> Scenario:
    return scenario.replace(trials=1000)


def test_roc_sweep_from_targets(small):
    points = roc_sweep(small, GRID)
    assert [p.target_pfa for p in points] == GRID
    assert points[0].gamma_bar > points[1].gamma_bar
    assert points[0].pd <= points[1].pd
    for p in points:
        assert p.pc <= p.pd
        assert p.pfa_ub >= 0
        assert len(p.row()) == 14


def test_roc_sweep_from_thresholds(small):
    points = roc_sweep(small, gamma_grid=[1.0, 2.0, 4.0])
    assert [p.target_pfa for p in points] == [None] * 3
    assert points[0].row()[1] == ""
    pfas = [p.pfa for p in points]
    assert pfas == sorted(pfas, reverse=True)


def test_roc_sweep_needs_one_grid(small):
    with pytest.raises(DomainError):
        roc_sweep(small)
    with pytest.raises(DomainError):
        roc_sweep(small, GRID, gamma_grid=[1.0])


def test_regime_comparison(small):
    curves = regime_comparison(small, GRID)
    assert set(curves) == set(NoiseRegime)
    for points in curves.values():
        assert len(points) == 2


def test_angle_sweep(small):
    points = angle_sweep(small, [0.2, 0.9], target_pfa=0.1, path=reference_path)
    assert len(points) == 2
    assert np.allclose(points[0].requested_angles, [0.2, 0.2])
    # white noise: whitened angles are the requested ones
    assert points[0].whitened_angle_min == pytest.approx(0.2, abs=1e-8)
    assert points[1].whitened_angle_min == pytest.approx(0.9, abs=1e-8)
    to_s3 = 0.5 * np.arccos(2 * np.cos(1.2) ** 2 - np.cos(1.8))
    assert points[1].whitened_angle_nearest == pytest.approx(to_s3, abs=1e-8)
    assert points[1].whitened_angle_sum == pytest.approx(0.9 + to_s3, abs=1e-8)
    assert not points[0].duplicate_flag
    assert points[0].summary.class_pc[0] < points[1].summary.class_pc[0]


def test_angle_sweep_default_path_rotates_towards_the_complement(small):
    (point,) = angle_sweep(small, [0.9], target_pfa=0.1)
    # S2 turns towards e3, e4 while S3 leans towards e3, -e4
    assert point.whitened_angle_min == pytest.approx(0.9, abs=1e-8)
    assert point.whitened_angle_nearest == pytest.approx(0.3, abs=1e-8)
    assert point.whitened_angle_sum == pytest.approx(1.2, abs=1e-8)


def test_angle_sweep_flags_duplicates(small):
    (point,) = angle_sweep(small, [0.0], target_pfa=0.1)
    assert point.duplicate_flag
    assert point.whitened_angle_min == pytest.approx(0.0, abs=1e-7)


def test_angle_sweep_needs_two_subspaces(small, single_union):
    with pytest.raises(DomainError):
        angle_sweep(small.replace(union=single_union), [0.2])


def test_eigen_aligned_union(colored_covariance, rng):
    union = eigen_aligned_union(colored_covariance, 1, 3, 0.0, rng)
    _, eigenvectors = eig_sym(colored_covariance)
    assert np.allclose(np.abs(union.subspaces[0].basis[:, 0]), np.abs(eigenvectors[:, -1]))
    assert np.allclose(np.abs(union.subspaces[1].basis[:, 0]), np.abs(eigenvectors[:, -2]))


def test_noise_geometry_orders_by_whitened_norm(small):
    rows = noise_geometry_experiment(small, condition=100.0)
    assert [r.subspace for r in rows] == [0, 1, 2]
    # S1 sits on the weakest noise directions
    assert rows[0].mean_xbar_norm > rows[1].mean_xbar_norm
    assert rows[0].pd >= rows[1].pd - 3 * rows[1].pd_se


def test_gap_experiment(small):
    rows = gap_experiment(small, [5.0, 10.0], GRID)
    assert [(r.snr_db, r.target_pfa) for r in rows] == [(5.0, 0.1), (5.0, 0.3), (10.0, 0.1), (10.0, 0.3)]
    for r in rows:
        assert r.gap == pytest.approx(r.pd - r.pc)
        assert r.gap >= 0


def test_n0_sweep(small):
    rows, mean_gaps = n0_sweep(small, [8, 50], GRID)
    assert len(rows) == 4
    assert set(mean_gaps) == {8, 50}
    for r in rows:
        assert r.abs_gap == pytest.approx(abs(r.pd_known - r.pd_unknown_cov))


def test_baseline_comparison(wide_union):
    scenario = Scenario(union=wide_union, snr_db=5.0, trials=1000, seed=2)
    gammas = calibrate_thresholds(scenario, [0.1, 0.2])
    rows = baseline_comparison(scenario, gammas)
    assert [r.gamma_bar for r in rows] == gammas
    for r in rows:
        # the direct-sum energy dominates every subspace energy on the same data
        assert r.sum_pfa >= r.uos_pfa
        assert r.sum_pd >= r.uos_pd
