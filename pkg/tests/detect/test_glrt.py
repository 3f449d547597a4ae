import numpy as np
import pytest

from uosdetect.detect import (
    DetectionOutcome,
    baseline_directsum,
    detect,
    empirical_whiteners,
    evaluate_observations,
    glrt_known,
    glrt_unknown_cov,
    glrt_unknown_stats,
    ml_coefficients,
    prepare,
    prepare_direct_sum,
    quadratic_energies,
    stat_quad,
    stat_quad_over_const,
    stat_quad_over_const_plus_norm,
    whitened_projectors,
)
from uosdetect.errors import (
    DimensionMismatch,
    DivisionByZero,
    DomainError,
    RegimeMismatch,
)
from uosdetect.geometry import Subspace, UnionModel, orthonormalize
from uosdetect.noise import (
    NoiseModel,
    NoiseRegime,
    inverse_sqrt,
    random_spd_covariance,
    sample_covariance,
)


def _projector(g: np.ndarray) -> np.ndarray:
    return g @ np.linalg.inv(g.T @ g) @ g.T


def test_noiseless_signal_selects_its_subspace(known_prep):
    y = np.array([3.0, 0.0, 0.0, 0.0])
    outcome = glrt_known(known_prep, y, gamma_bar=1.0)
    assert outcome.khat == 0
    assert outcome.statistic == pytest.approx(4.5)
    assert outcome.signal_detected
    assert outcome.active_subspace == 0
    assert np.allclose(
        outcome.energies, 9 * np.cos([0.0, 0.6, 1.2]) ** 2, atol=1e-10
    )


def test_below_threshold_names_no_subspace(known_prep):
    outcome = glrt_known(known_prep, np.array([0.5, 0.0, 0.0, 0.0]), gamma_bar=1.0)
    assert not outcome.signal_detected
    assert outcome.active_subspace is None
    assert outcome.khat == 0


def test_zero_observation_in_known_regime(known_prep):
    outcome = glrt_known(known_prep, np.zeros(4), gamma_bar=0.0)
    assert outcome.statistic == 0.0
    assert outcome.khat == 0
    assert not outcome.signal_detected


def test_ties_pick_the_first_index():
    s = Subspace(basis=np.eye(4)[:, :2])
    union = UnionModel(subspaces=(Subspace(basis=np.eye(4)[:, 2:]), s, s))
    prep = prepare(
        union, NoiseModel(regime=NoiseRegime.KNOWN, sigma2=1.0, covariance=np.eye(4))
    )
    assert glrt_known(prep, np.array([1.0, 1.0, 0.0, 0.0]), 0.1).khat == 1


def test_known_statistic_in_colored_noise(colored_prep, colored_covariance, union, rng):
    y = union.subspaces[1].basis @ rng.standard_normal(2) + rng.standard_normal(4)
    w = inverse_sqrt(colored_covariance).inv_sqrt
    z = w @ y
    expected = [z @ _projector(w @ s.basis) @ z / (2 * 0.5) for s in union.subspaces]
    outcome = glrt_known(colored_prep, y, gamma_bar=0.0)
    assert outcome.khat == int(np.argmax(expected))
    assert outcome.statistic == pytest.approx(max(expected), rel=1e-10)


def test_unknown_covariance_statistic(unknown_cov_prep, training, union, rng):
    y = rng.standard_normal(4)
    w = inverse_sqrt(sample_covariance(training)).inv_sqrt
    z = w @ y
    energies = [z @ _projector(w @ s.basis) @ z for s in union.subspaces]
    outcome = glrt_unknown_cov(unknown_cov_prep, y, gamma_bar=0.1)
    assert outcome.statistic == pytest.approx(max(energies) / (50 * 1.0 + z @ z), rel=1e-10)


def test_unknown_statistics_is_scale_invariant(unknown_stats_prep, rng):
    y = rng.standard_normal(4)
    base = glrt_unknown_stats(unknown_stats_prep, y, gamma_bar=0.5)
    for scale in (1e-3, 7.0, 1e3):
        scaled = glrt_unknown_stats(unknown_stats_prep, scale * y, gamma_bar=0.5)
        assert scaled.khat == base.khat
        assert abs(scaled.statistic - base.statistic) <= 1e-15
    assert 0.0 <= base.statistic <= 1.0


def test_unknown_statistics_rejects_zero(unknown_stats_prep):
    with pytest.raises(DivisionByZero):
        glrt_unknown_stats(unknown_stats_prep, np.zeros(4), gamma_bar=0.5)


def test_regime_mismatch(known_prep, unknown_stats_prep):
    with pytest.raises(RegimeMismatch):
        glrt_unknown_cov(known_prep, np.ones(4), 1.0)
    with pytest.raises(RegimeMismatch):
        glrt_known(unknown_stats_prep, np.ones(4), 1.0)


def test_detect_dispatches_on_regime(known_prep, unknown_stats_prep, rng):
    y = rng.standard_normal(4)
    assert detect(known_prep, y, 1.0).statistic == glrt_known(known_prep, y, 1.0).statistic
    assert (
        detect(unknown_stats_prep, y, 0.5).statistic
        == glrt_unknown_stats(unknown_stats_prep, y, 0.5).statistic
    )


def test_observation_dimension(known_prep):
    with pytest.raises(DimensionMismatch):
        detect(known_prep, np.ones(5), 1.0)


def test_outcome_validates_decision():
    with pytest.raises(DomainError):
        DetectionOutcome(
            energies=[1.0, 2.0],
            khat=0,
            statistic=1.0,
            threshold=0.5,
            signal_detected=True,
            active_subspace=0,
        )
    with pytest.raises(DomainError):
        DetectionOutcome(
            energies=[1.0, 2.0],
            khat=1,
            statistic=1.0,
            threshold=0.5,
            signal_detected=True,
            active_subspace=None,
        )


class TestDirectSum:
    def test_gap_observation(self, wide_union):
        noise = NoiseModel(regime=NoiseRegime.KNOWN, sigma2=1.0, covariance=np.eye(8))
        uos = prepare(wide_union, noise)
        total = prepare_direct_sum(wide_union, noise)
        u1 = wide_union.subspaces[1].basis[:, 0]
        u2 = wide_union.subspaces[2].basis[:, 1]
        u2 = u2 - u1 * (u1 @ u2)
        y = u1 + u2 / np.linalg.norm(u2)
        y = y / np.linalg.norm(y) * 3
        sum_outcome = baseline_directsum(total, y, 1.0)
        assert glrt_known(uos, y, 1.0).statistic < sum_outcome.statistic
        assert sum_outcome.statistic == pytest.approx(4.5)
        assert sum_outcome.active_subspace is None
        assert not sum_outcome.classifies

    def test_needs_single_subspace(self, known_prep):
        with pytest.raises(DimensionMismatch):
            baseline_directsum(known_prep, np.ones(4), 1.0)


def test_ml_coefficients_recover_noiseless_theta(colored_prep, union):
    theta = np.array([1.5, -0.5])
    y = union.subspaces[2].basis @ theta
    assert np.allclose(ml_coefficients(colored_prep, y, 2), theta, atol=1e-10)
    with pytest.raises(DomainError):
        ml_coefficients(colored_prep, y, 3)


def test_whitened_projectors_are_projectors(union, colored_covariance):
    w = inverse_sqrt(colored_covariance).inv_sqrt
    projectors = whitened_projectors(w, union.bases)
    assert projectors.shape == (3, 4, 4)
    for k, p in enumerate(projectors):
        assert np.max(np.abs(p @ p - p)) < 1e-10
        assert np.max(np.abs(p - p.T)) < 1e-10
        g = w @ union.bases[k]
        assert np.max(np.abs(p @ g - g)) < 1e-10


def test_empirical_whiteners_match_single_set(training, rng):
    stack = np.stack([training, rng.standard_normal((4, 50))])
    whiteners = empirical_whiteners(stack)
    assert np.allclose(whiteners[0], inverse_sqrt(sample_covariance(training)).inv_sqrt)
    sigma = stack[1] @ stack[1].T / 50
    assert np.max(np.abs(whiteners[1] @ sigma @ whiteners[1] - np.eye(4))) < 1e-8


def test_prepare_dimension_mismatch(union):
    with pytest.raises(DimensionMismatch):
        prepare(union, NoiseModel(regime=NoiseRegime.KNOWN, sigma2=1.0, covariance=np.eye(5)))


def _rotation(angle: float) -> np.ndarray:
    return np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])


@pytest.mark.parametrize("regime", [NoiseRegime.KNOWN, NoiseRegime.UNKNOWN_STATISTICS])
def test_decision_ignores_the_choice_of_basis(union, colored_covariance, training, regime, rng):
    if regime is NoiseRegime.KNOWN:
        noise = NoiseModel(regime=regime, sigma2=0.5, covariance=colored_covariance)
    else:
        noise = NoiseModel(regime=regime, training_samples=training)
    rotated = UnionModel(
        subspaces=tuple(
            Subspace(basis=s.basis @ _rotation(0.4 + k)) for k, s in enumerate(union.subspaces)
        )
    )
    prep, rotated_prep = prepare(union, noise), prepare(rotated, noise)
    for _ in range(20):
        y = union.subspaces[rng.integers(3)].basis @ rng.standard_normal(2)
        y = y + 0.5 * rng.standard_normal(4)
        outcome = detect(prep, y, 0.5)
        moved = detect(rotated_prep, y, 0.5)
        assert moved.khat == outcome.khat
        assert moved.statistic == pytest.approx(outcome.statistic, rel=1e-10, abs=1e-12)
        assert np.allclose(moved.energies, outcome.energies, atol=1e-10)


def test_decision_ignores_the_common_whitened_complement(wide_union, rng):
    covariance = random_spd_covariance(8, 10.0, np.random.default_rng(5))
    prep = prepare(
        wide_union, NoiseModel(regime=NoiseRegime.KNOWN, sigma2=1.0, covariance=covariance)
    )
    # u is orthogonal to every H_k, so v = R u has H_k' R^{-1} v = 0 for all k
    u = np.linalg.svd(np.concatenate(wide_union.bases, axis=1))[0][:, 6:]
    for _ in range(20):
        y = wide_union.subspaces[rng.integers(3)].basis @ rng.standard_normal(2)
        y = y + 0.3 * rng.standard_normal(8)
        v = covariance @ u @ (5 * rng.standard_normal(2))
        leaks = wide_union.bases.transpose(0, 2, 1) @ np.linalg.solve(covariance, v)
        assert np.max(np.abs(leaks)) < 1e-10
        outcome = glrt_known(prep, y, 1.5)
        shifted = glrt_known(prep, y + v, 1.5)
        assert shifted.khat == outcome.khat
        assert shifted.signal_detected == outcome.signal_detected
        assert shifted.statistic == pytest.approx(outcome.statistic, abs=1e-10)


def test_selected_energy_ignores_rotation_and_translation(colored_prep, union, rng):
    y = union.subspaces[1].basis @ rng.standard_normal(2) + 0.3 * rng.standard_normal(4)
    w = colored_prep.whitener.inv_sqrt
    z = w @ y
    khat = glrt_known(colored_prep, y, 1.0).khat
    p = colored_prep.projectors[khat]
    b = orthonormalize(w @ union.bases[khat]).basis
    rotation = np.eye(4) - p + b @ _rotation(0.9) @ b.T
    translation = (np.eye(4) - p) @ rng.standard_normal(4)
    for moved in (rotation @ z, z + translation):
        energies = quadratic_energies(colored_prep.projectors, moved[None, :])[0]
        assert energies[khat] == pytest.approx(z @ p @ z, abs=1e-10)


def test_ml_residual_is_orthogonal_to_the_whitened_subspace(colored_prep, union, rng):
    w = colored_prep.whitener.inv_sqrt
    for k in range(3):
        y = rng.standard_normal(4)
        theta = ml_coefficients(colored_prep, y, k)
        g = w @ union.bases[k]
        residual = w @ y - g @ theta
        assert np.max(np.abs(g.T @ residual)) < 1e-10


def test_ml_coefficients_vanish_off_the_subspace(colored_prep, union, colored_covariance, rng):
    for k in range(3):
        h = union.bases[k]
        # y = R u with u orthogonal to H_k gives H_k' R^{-1} y = 0
        y = colored_covariance @ (np.eye(4) - h @ h.T) @ rng.standard_normal(4)
        assert np.allclose(ml_coefficients(colored_prep, y, k), 0.0, atol=1e-10)


def test_single_observation_statistics_use_the_shorthands(
    known_prep, unknown_cov_prep, unknown_stats_prep, rng
):
    y = rng.standard_normal(4)
    for prep, shorthand in (
        (known_prep, lambda z, p: stat_quad_over_const(z, p, 2.0)),
        (unknown_cov_prep, lambda z, p: stat_quad_over_const_plus_norm(z, p, 50.0)),
        (unknown_stats_prep, stat_quad),
    ):
        outcome = detect(prep, y, 0.5)
        z = prep.whitener.inv_sqrt @ y
        assert outcome.statistic == shorthand(z, prep.projectors[outcome.khat])
        batch = evaluate_observations(
            prep.regime,
            prep.projectors,
            z[None, :],
            prep.sigma2,
            prep.n0,
            prep.subspace_dim,
            np.array([-1]),
            np.zeros((1, 4)),
        )
        assert batch.statistic[0] == pytest.approx(outcome.statistic, rel=1e-12)
