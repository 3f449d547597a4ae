"""
Seeded Monte-Carlo harness.

Every trial draws from its own generator, seeded by the scenario seed and a
(stream, point, trial index) key, so a trial's data never depends on which
chunk or worker evaluates it. Chunks are evaluated as vectorized batches and
concatenated in trial order.
"""

from dataclasses import dataclass
from enum import IntEnum
from typing import Optional, Sequence

import numpy as np

import uosdetect
from uosdetect.detect import (
    DetectionOutcome,
    TrialBatch,
    empirical_whiteners,
    evaluate_observations,
    whitened_projectors,
)
from uosdetect.errors import DomainError, TooFewTrials
from uosdetect.geometry import UnionModel
from uosdetect.noise import NoiseRegime, inverse_sqrt, sqrt_spd
from uosdetect.noise.sampling import draw_noise
from uosdetect.sim.scenario import Scenario, TrialRecord, TrialSummary
from uosdetect.utilities.logging import get_logger
from uosdetect.utilities.prefect import map_ordered

logger = get_logger(__name__)

# hypothesis codes for `simulate`; nonnegative values fix the active class
NULL = -1
SIGNAL = -2


class Stream(IntEnum):
    CALIBRATION = 1
    FALSE_ALARM = 2
    DETECTION = 3
    EVENTS = 4
    CONSTRUCTION = 5


def trial_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))
    )


def _signal(basis: np.ndarray, energy: float, rng: np.random.Generator) -> np.ndarray:
    theta = rng.standard_normal(basis.shape[1])
    return basis @ (theta * np.sqrt(energy) / np.linalg.norm(theta))


def sample_signal(
    union: UnionModel, k: int, snr_db: float, sigma2: float, rng: np.random.Generator
) -> np.ndarray:
    """
    x = H_k theta with theta uniform on the sphere of radius
    sqrt(snr_linear sigma^2), so ||x||^2 equals snr_linear sigma^2 exactly.
    """
    if not 0 <= k < union.n_subspaces:
        raise DomainError(f"Class {k} outside 0..{union.n_subspaces - 1}")
    energy = 10 ** (snr_db / 10) * sigma2
    return _signal(union.subspaces[k].basis, energy, rng)


@dataclass(frozen=True)
class _Context:
    scenario: Scenario
    signal_bases: np.ndarray
    detector_bases: np.ndarray
    root: np.ndarray
    true_inv_sqrt: np.ndarray
    known_projectors: Optional[np.ndarray]

    @classmethod
    def build(cls, scenario: Scenario, detector_union: Optional[UnionModel]) -> "_Context":
        covariance = scenario.noise_covariance
        true_inv_sqrt = inverse_sqrt(covariance).inv_sqrt
        detector_bases = (detector_union or scenario.union).bases
        known_projectors = None
        if scenario.regime is NoiseRegime.KNOWN:
            known_projectors = whitened_projectors(true_inv_sqrt, detector_bases)
        return cls(
            scenario=scenario,
            signal_bases=scenario.union.bases,
            detector_bases=detector_bases,
            root=sqrt_spd(covariance),
            true_inv_sqrt=true_inv_sqrt,
            known_projectors=known_projectors,
        )


def _simulate_chunk(
    context: _Context, hypothesis: int, stream: int, point: int, start: int, stop: int
) -> TrialBatch:
    scenario = context.scenario
    m = scenario.union.ambient_dim
    k0 = scenario.union.n_subspaces
    size = stop - start
    energy = scenario.snr_linear * scenario.sigma2
    priors = scenario.priors

    classes = np.full(size, NULL, dtype=int)
    signals = np.zeros((size, m))
    observations = np.empty((size, m))
    training = None
    if scenario.regime.uses_training:
        training = np.empty((size, m, scenario.n0))

    for row, trial in enumerate(range(start, stop)):
        rng = trial_rng(scenario.seed, stream, point, trial)
        k = hypothesis
        if hypothesis == SIGNAL:
            k = int(rng.choice(k0, p=priors))
        classes[row] = k
        if k >= 0:
            signals[row] = _signal(context.signal_bases[k], energy, rng)
        observations[row] = signals[row] + draw_noise(scenario.sigma2, context.root, rng)
        if training is not None:
            training[row] = context.root @ rng.standard_normal((m, scenario.n0))

    if training is None:
        projectors = context.known_projectors
        whitened = observations @ context.true_inv_sqrt
    else:
        whiteners = empirical_whiteners(training)
        projectors = whitened_projectors(whiteners, context.detector_bases)
        whitened = np.einsum("tij,tj->ti", whiteners, observations)

    return evaluate_observations(
        regime=scenario.regime,
        projectors=projectors,
        whitened=whitened,
        sigma2=scenario.sigma2,
        n0=scenario.n0,
        subspace_dim=scenario.union.subspace_dim,
        classes=classes,
        whitened_signals=signals @ context.true_inv_sqrt,
    )


def simulate(
    scenario: Scenario,
    hypothesis: int = NULL,
    *,
    stream: Stream,
    point: int = 0,
    trials: Optional[int] = None,
    detector_union: Optional[UnionModel] = None,
) -> TrialBatch:
    """
    Run `trials` detector evaluations.

    `hypothesis` is `NULL` (noise only), `SIGNAL` (class drawn from the
    priors per trial) or a fixed class index. With `detector_union` the
    observations are generated from the scenario's union but detected with
    another one; the same seed then yields the same observations.
    """
    trials = trials or scenario.trials
    if hypothesis >= scenario.union.n_subspaces or hypothesis < SIGNAL:
        raise DomainError(f"Invalid hypothesis {hypothesis}")
    context = _Context.build(scenario, detector_union)
    chunk_size = uosdetect.settings.chunk_size
    chunks = [(start, min(start + chunk_size, trials)) for start in range(0, trials, chunk_size)]

    def run_chunk(chunk: tuple[int, int]) -> TrialBatch:
        logger.debug(f"Simulating trials {chunk[0]}..{chunk[1] - 1} of stream {stream}")
        return _simulate_chunk(context, hypothesis, int(stream), point, *chunk)

    batches = map_ordered(
        run_chunk, chunks, uosdetect.settings.workers, name="uosdetect-trials"
    )
    return TrialBatch.concatenate(batches)


def calibrated_thresholds(statistics: np.ndarray, target_pfas: Sequence[float]) -> list[float]:
    """
    Empirical (1 - target) quantiles with the "higher" rule, so the fraction of
    calibration statistics strictly above each threshold never exceeds its target.
    """
    return [
        float(np.quantile(statistics, 1 - target, method="higher")) for target in target_pfas
    ]


def _check_targets(target_pfas: Sequence[float], trials: int) -> None:
    for target in target_pfas:
        if not 0 < target <= 1:
            raise DomainError(f"Target P_FA must lie in (0, 1], got {target}")
        if trials < 10 / target:
            raise TooFewTrials(
                f"{trials} calibration trials are too few for P_FA {target}"
            )


def calibrate_thresholds(
    scenario: Scenario,
    target_pfas: Sequence[float],
    calibration_trials: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> list[float]:
    """Thresholds for several targets from one noise-only calibration run."""
    trials = calibration_trials or scenario.trials
    _check_targets(target_pfas, trials)
    if rng is not None:
        scenario = scenario.replace(seed=int(rng.integers(2**63)))
    batch = simulate(scenario, NULL, stream=Stream.CALIBRATION, trials=trials)
    thresholds = calibrated_thresholds(batch.statistic, target_pfas)
    logger.info(
        f"Calibrated {scenario.regime.value} thresholds "
        + ", ".join(f"P_FA {t}: {g:.4f}" for t, g in zip(target_pfas, thresholds))
    )
    return thresholds


def calibrate_threshold(
    scenario: Scenario,
    target_pfa: float,
    calibration_trials: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """Threshold whose empirical false alarm rate under H0 is at most `target_pfa`."""
    return calibrate_thresholds(scenario, [target_pfa], calibration_trials, rng)[0]


def _rate(indicator: np.ndarray) -> tuple[float, float]:
    trials = len(indicator)
    if trials == 0:
        return 0.0, 0.0
    p = np.count_nonzero(indicator) / trials
    return p, float(np.sqrt(p * (1 - p) / trials))


def summarize(null_batch: TrialBatch, signal_batch: TrialBatch, gamma_bar: float) -> TrialSummary:
    pfa, pfa_se = _rate(null_batch.detected(gamma_bar))
    detected = signal_batch.detected(gamma_bar)
    correct = signal_batch.correct(gamma_bar)
    pd, pd_se = _rate(detected)
    pc, pc_se = _rate(correct)

    k0 = signal_batch.n_subspaces
    counts, class_pd, class_pd_se, class_pc, class_pc_se = [], [], [], [], []
    for k in range(k0):
        mask = signal_batch.classes == k
        counts.append(int(np.count_nonzero(mask)))
        p, se = _rate(detected[mask])
        class_pd.append(p)
        class_pd_se.append(se)
        p, se = _rate(correct[mask])
        class_pc.append(p)
        class_pc_se.append(se)

    return TrialSummary(
        gamma_bar=gamma_bar,
        pfa=pfa,
        pfa_se=pfa_se,
        pd=pd,
        pd_se=pd_se,
        pc=pc,
        pc_se=pc_se,
        null_trials=len(null_batch),
        signal_trials=len(signal_batch),
        class_counts=tuple(counts),
        class_pd=class_pd,
        class_pd_se=class_pd_se,
        class_pc=class_pc,
        class_pc_se=class_pc_se,
    )


def simulate_pair(
    scenario: Scenario,
    point: int = 0,
    detector_union: Optional[UnionModel] = None,
) -> tuple[TrialBatch, TrialBatch]:
    """Noise-only and signal batches of `scenario.trials` trials each."""
    null_batch = simulate(
        scenario, NULL, stream=Stream.FALSE_ALARM, point=point, detector_union=detector_union
    )
    signal_batch = simulate(
        scenario, SIGNAL, stream=Stream.DETECTION, point=point, detector_union=detector_union
    )
    return null_batch, signal_batch


def batch_records(batch: TrialBatch, gamma_bar: float, first_id: int = 0) -> list[TrialRecord]:
    records = []
    detected = batch.detected(gamma_bar)
    for i in range(len(batch)):
        khat = int(batch.khat[i])
        records.append(
            TrialRecord(
                trial_id=first_id + i,
                hypothesis=int(batch.classes[i]) + 1,
                outcome=DetectionOutcome(
                    energies=batch.energies[i],
                    khat=khat,
                    statistic=float(batch.statistic[i]),
                    threshold=gamma_bar,
                    signal_detected=bool(detected[i]),
                    active_subspace=khat if detected[i] else None,
                ),
                whitened_signal_energy=float(batch.signal_energy[i]),
            )
        )
    return records


def run_trials(scenario: Scenario, gamma_bar: float) -> tuple[list[TrialRecord], TrialSummary]:
    """
    `scenario.trials` noise-only trials for P_FA followed by `scenario.trials`
    signal trials (class drawn from the priors) for P_D and P_C.
    """
    logger.info(
        f"Running {2 * scenario.trials} trials ({scenario.regime.value}, "
        f"SNR {scenario.snr_db} dB, gamma_bar {gamma_bar:.4f})"
    )
    null_batch, signal_batch = simulate_pair(scenario)
    records = batch_records(null_batch, gamma_bar) + batch_records(
        signal_batch, gamma_bar, first_id=len(null_batch)
    )
    return records, summarize(null_batch, signal_batch, gamma_bar)
