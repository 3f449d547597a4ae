from typing import Callable, Optional, Sequence

import numpy as np
from pydantic import field_validator

from uosdetect.bounds import bound_report
from uosdetect.detect import PreparedUnion, TrialBatch, prepare
from uosdetect.errors import DomainError, InsufficientAmbientDim
from uosdetect.geometry import (
    Subspace,
    UnionModel,
    complement_directions,
    direct_sum,
    orthonormalize,
    rotated_subspace,
    union_geometry,
)
from uosdetect.noise import NoiseRegime, eig_sym, inverse_sqrt, random_spd_covariance
from uosdetect.sim.harness import (
    Stream,
    calibrate_threshold,
    calibrate_thresholds,
    simulate,
    simulate_pair,
    summarize,
    trial_rng,
)
from uosdetect.sim.scenario import CurvePoint, Scenario, TrialSummary
from uosdetect.utilities.general import UoSModel, frozen_array
from uosdetect.utilities.logging import get_logger

logger = get_logger(__name__)

DEFAULT_N0 = 200


def known_prep(scenario: Scenario) -> Optional[PreparedUnion]:
    """The union whitened with the true covariance, for known-regime scenarios."""
    if scenario.regime is not NoiseRegime.KNOWN:
        return None
    return prepare(scenario.union, scenario.truth())


def _curve_point(
    scenario: Scenario,
    null_batch: TrialBatch,
    signal_batch: TrialBatch,
    gamma_bar: float,
    target_pfa: Optional[float],
    eta0: float,
) -> CurvePoint:
    summary = summarize(null_batch, signal_batch, gamma_bar)
    report = bound_report(
        null_batch,
        signal_batch,
        scenario.priors,
        gamma_bar,
        eta0=eta0,
        scenario_id=scenario.scenario_id,
        prep=known_prep(scenario),
    )
    return CurvePoint(
        gamma_bar=gamma_bar,
        target_pfa=target_pfa,
        pfa=summary.pfa,
        pfa_se=summary.pfa_se,
        pd=summary.pd,
        pd_se=summary.pd_se,
        pc=summary.pc,
        pc_se=summary.pc_se,
        pfa_ub=report.pfa_upper,
        pd_ub=report.pd_upper,
        pd_lb=report.pd_lower,
        pc_lb_frechet_mean=report.pc_lower_frechet_mean,
        pc_lb_bessel_mean=report.pc_lower_bessel_mean,
        pd_lb_union=report.pd_lower_union,
        summary=summary,
    )


def roc_sweep(
    scenario: Scenario,
    target_pfa_grid: Optional[Sequence[float]] = None,
    gamma_grid: Optional[Sequence[float]] = None,
    calibration_trials: Optional[int] = None,
    eta0: float = 0.25,
) -> list[CurvePoint]:
    """
    ROC samples with bounds. Thresholds are either calibrated from
    `target_pfa_grid` or given directly as `gamma_grid`; every point is
    evaluated on the same noise-only and signal batches.
    """
    if (target_pfa_grid is None) == (gamma_grid is None):
        raise DomainError("Pass exactly one of target_pfa_grid and gamma_grid")
    if target_pfa_grid is not None:
        targets = list(target_pfa_grid)
        thresholds = calibrate_thresholds(scenario, targets, calibration_trials)
    else:
        thresholds = list(gamma_grid)
        targets = [None] * len(thresholds)

    null_batch, signal_batch = simulate_pair(scenario)
    return [
        _curve_point(scenario, null_batch, signal_batch, gamma_bar, target, eta0)
        for target, gamma_bar in zip(targets, thresholds)
    ]


def _roc_summaries(
    scenario: Scenario,
    target_pfa_grid: Sequence[float],
    calibration_trials: Optional[int] = None,
) -> list[TrialSummary]:
    thresholds = calibrate_thresholds(scenario, target_pfa_grid, calibration_trials)
    null_batch, signal_batch = simulate_pair(scenario)
    return [summarize(null_batch, signal_batch, gamma_bar) for gamma_bar in thresholds]


def regime_comparison(
    scenario: Scenario,
    target_pfa_grid: Sequence[float],
    calibration_trials: Optional[int] = None,
    eta0: float = 0.25,
) -> dict[NoiseRegime, list[CurvePoint]]:
    """The same geometry and seed under each noise regime."""
    n0 = scenario.n0 or DEFAULT_N0
    return {
        regime: roc_sweep(
            scenario.replace(regime=regime, n0=n0),
            target_pfa_grid,
            calibration_trials=calibration_trials,
            eta0=eta0,
        )
        for regime in NoiseRegime
    }


class AngleSweepPoint(UoSModel):
    requested_angles: np.ndarray
    whitened_angle_min: float
    whitened_angle_sum: float
    whitened_angle_nearest: float
    duplicate_flag: bool
    gamma_bar: float
    summary: TrialSummary

    @field_validator("requested_angles", mode="before")
    @classmethod
    def _coerce(cls, v):
        return frozen_array(v, ndim=1, name="requested_angles")


def angle_sweep(
    scenario: Scenario,
    angle_grid: Sequence[float],
    target_pfa: float = 0.1,
    calibration_trials: Optional[int] = None,
    path: Optional[Callable[[float], Subspace]] = None,
) -> list[AngleSweepPoint]:
    """
    Replace the second subspace of the union by `path(phi)`, recalibrate and
    rerun at every angle. Without a path the first subspace is rotated through
    equal angles `phi` towards a fixed complement. Angles are reported between
    subspaces whitened with the true covariance. The same random streams are
    reused at every angle.
    """
    union = scenario.union
    if union.n_subspaces < 2:
        raise DomainError("An angle sweep needs at least two subspaces")
    base = union.subspaces[0]
    directions = complement_directions(base)
    whitener = inverse_sqrt(scenario.noise_covariance)
    others = [j for j in range(union.n_subspaces) if j != 1]

    points = []
    for phi in angle_grid:
        angles = np.full(union.subspace_dim, float(phi))
        swept = rotated_subspace(base, angles, directions) if path is None else path(float(phi))
        subspaces = list(union.subspaces)
        subspaces[1] = swept
        point_scenario = scenario.replace(union=UnionModel(subspaces=tuple(subspaces)))

        geometry = union_geometry(point_scenario.union, whitener)
        to_swept = [geometry.min_angles[1, j] for j in others]
        gamma_bar = calibrate_threshold(point_scenario, target_pfa, calibration_trials)
        null_batch, signal_batch = simulate_pair(point_scenario)
        points.append(
            AngleSweepPoint(
                requested_angles=angles,
                whitened_angle_min=float(geometry.min_angles[0, 1]),
                whitened_angle_sum=float(np.sum(to_swept)),
                whitened_angle_nearest=float(np.min(to_swept)),
                duplicate_flag=any(1 in pair for pair in geometry.near_identical),
                gamma_bar=gamma_bar,
                summary=summarize(null_batch, signal_batch, gamma_bar),
            )
        )
        logger.info(f"Angle {phi:.3f}: P_D {points[-1].summary.pd:.4f}, P_C {points[-1].summary.pc:.4f}")
    return points


class SubspaceGeometryRow(UoSModel):
    subspace: int
    mean_xbar_norm: float
    pd: float
    pd_se: float
    pc: float
    pc_se: float


def eigen_aligned_union(
    covariance: np.ndarray,
    subspace_dim: int,
    n_subspaces: int,
    perturbation: float,
    rng: np.random.Generator,
) -> UnionModel:
    """
    S1 from the eigenvectors of the n smallest eigenvalues, S2 from the next n,
    each perturbed by Gaussian noise of scale `perturbation`; any further
    subspaces are random.
    """
    eigenvalues, eigenvectors = eig_sym(covariance)
    m = len(eigenvalues)
    if m < 2 * subspace_dim:
        raise InsufficientAmbientDim(
            f"Two eigen-aligned {subspace_dim}-dimensional subspaces need m >= {2 * subspace_dim}"
        )
    bases = []
    for i in range(min(2, n_subspaces)):
        columns = eigenvectors[:, m - (i + 1) * subspace_dim : m - i * subspace_dim]
        bases.append(columns + perturbation * rng.standard_normal(columns.shape))
    for _ in range(n_subspaces - len(bases)):
        bases.append(rng.standard_normal((m, subspace_dim)))
    return UnionModel(subspaces=tuple(orthonormalize(b) for b in bases))


def noise_geometry_experiment(
    scenario: Scenario,
    condition: float = 100.0,
    perturbation: float = 0.05,
    target_pfa: float = 0.1,
    calibration_trials: Optional[int] = None,
) -> list[SubspaceGeometryRow]:
    """
    Draw a random covariance with the given condition number, align the
    subspaces with its eigenvectors and measure per-subspace whitened signal
    norm, P_D and P_C. The scenario supplies dimensions, regime, SNR, trials
    and seed; its own union and covariance are replaced.
    """
    m = scenario.union.ambient_dim
    rng = trial_rng(scenario.seed, Stream.CONSTRUCTION)
    covariance = random_spd_covariance(m, condition, rng)
    union = eigen_aligned_union(
        covariance, scenario.union.subspace_dim, scenario.union.n_subspaces, perturbation, rng
    )
    experiment = scenario.replace(union=union, covariance=covariance)
    gamma_bar = calibrate_threshold(experiment, target_pfa, calibration_trials)

    rows = []
    for k in range(union.n_subspaces):
        batch = simulate(experiment, k, stream=Stream.DETECTION, point=k)
        detected = batch.detected(gamma_bar)
        correct = batch.correct(gamma_bar)
        pd = np.count_nonzero(detected) / len(batch)
        pc = np.count_nonzero(correct) / len(batch)
        rows.append(
            SubspaceGeometryRow(
                subspace=k,
                mean_xbar_norm=float(np.mean(np.sqrt(batch.signal_energy))),
                pd=pd,
                pd_se=float(np.sqrt(pd * (1 - pd) / len(batch))),
                pc=pc,
                pc_se=float(np.sqrt(pc * (1 - pc) / len(batch))),
            )
        )
    return rows


class GapRow(UoSModel):
    snr_db: float
    target_pfa: float
    pd: float
    pc: float
    gap: float
    gap_se: float


def gap_experiment(
    scenario: Scenario,
    snr_list: Sequence[float],
    target_pfa_grid: Sequence[float],
    calibration_trials: Optional[int] = None,
) -> list[GapRow]:
    """
    P_D - P_C over the P_FA grid at each SNR. The gap is the probability of
    detecting with the wrong subspace, so its standard error is that of a
    single proportion.
    """
    rows = []
    for snr_db in snr_list:
        summaries = _roc_summaries(
            scenario.replace(snr_db=snr_db), target_pfa_grid, calibration_trials
        )
        for target, summary in zip(target_pfa_grid, summaries):
            gap = max(summary.gap, 0.0)
            rows.append(
                GapRow(
                    snr_db=snr_db,
                    target_pfa=target,
                    pd=summary.pd,
                    pc=summary.pc,
                    gap=summary.gap,
                    gap_se=float(np.sqrt(gap * (1 - gap) / summary.signal_trials)),
                )
            )
    return rows


class N0Row(UoSModel):
    n0: int
    target_pfa: float
    pd_known: float
    pd_unknown_cov: float
    abs_gap: float


def n0_sweep(
    scenario: Scenario,
    n0_list: Sequence[int],
    target_pfa_grid: Sequence[float],
    calibration_trials: Optional[int] = None,
) -> tuple[list[N0Row], dict[int, float]]:
    """
    Known-regime ROC against the unknown-covariance ROC for each training-set
    size. Returns the rows and the mean absolute P_D gap per N0.
    """
    known = _roc_summaries(
        scenario.replace(regime=NoiseRegime.KNOWN), target_pfa_grid, calibration_trials
    )
    rows: list[N0Row] = []
    mean_gaps: dict[int, float] = {}
    for n0 in n0_list:
        unknown = _roc_summaries(
            scenario.replace(regime=NoiseRegime.UNKNOWN_COVARIANCE, n0=n0),
            target_pfa_grid,
            calibration_trials,
        )
        gaps = []
        for target, k_summary, u_summary in zip(target_pfa_grid, known, unknown):
            gap = abs(k_summary.pd - u_summary.pd)
            gaps.append(gap)
            rows.append(
                N0Row(
                    n0=n0,
                    target_pfa=target,
                    pd_known=k_summary.pd,
                    pd_unknown_cov=u_summary.pd,
                    abs_gap=gap,
                )
            )
        mean_gaps[n0] = float(np.mean(gaps))
        logger.info(f"N0 = {n0}: mean |P_D gap| {mean_gaps[n0]:.4f}")
    return rows, mean_gaps


class BaselineRow(UoSModel):
    gamma_bar: float
    uos_pfa: float
    uos_pfa_se: float
    uos_pd: float
    uos_pd_se: float
    sum_pfa: float
    sum_pfa_se: float
    sum_pd: float
    sum_pd_se: float


def baseline_comparison(
    scenario: Scenario, gamma_grid: Sequence[float]
) -> list[BaselineRow]:
    """
    The union detector against the direct-sum detector on identical
    observations, at shared thresholds.
    """
    sum_union = UnionModel(subspaces=(direct_sum(scenario.union),))
    uos_null, uos_signal = simulate_pair(scenario)
    sum_null, sum_signal = simulate_pair(scenario, detector_union=sum_union)

    rows = []
    for gamma_bar in gamma_grid:
        uos = summarize(uos_null, uos_signal, gamma_bar)
        total = summarize(sum_null, sum_signal, gamma_bar)
        rows.append(
            BaselineRow(
                gamma_bar=gamma_bar,
                uos_pfa=uos.pfa,
                uos_pfa_se=uos.pfa_se,
                uos_pd=uos.pd,
                uos_pd_se=uos.pd_se,
                sum_pfa=total.pfa,
                sum_pfa_se=total.pfa_se,
                sum_pd=total.pd,
                sum_pd_se=total.pd_se,
            )
        )
    return rows
