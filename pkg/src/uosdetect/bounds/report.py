from typing import Optional, Sequence

import numpy as np
from pydantic import field_validator, model_validator

from uosdetect.bounds.events import (
    EventKind,
    EventProbabilities,
    EventSpec,
    event_indicators,
)
from uosdetect.bounds.union import (
    BesselBound,
    bessel_bound_samples,
    known_detection_marginals,
    pc_lower_frechet,
    pd_bounds,
    pd_lower_union,
    pfa_union_bound,
    pfa_union_bound_known,
)
from uosdetect.detect import PreparedUnion, TrialBatch
from uosdetect.errors import DomainError, RegimeMismatch, TooFewTrials
from uosdetect.noise import NoiseRegime
from uosdetect.utilities.general import UoSModel, frozen_array
from uosdetect.utilities.jinja import report_env


class BoundReport(UoSModel):
    """All bound values at one threshold, for one scenario."""

    regime: NoiseRegime
    gamma_bar: float
    scenario_id: str = ""
    pfa_upper: float
    pd_upper: float
    pd_lower: float
    pd_lower_union: float
    pc_lower_frechet: np.ndarray
    pc_lower_bessel: np.ndarray
    pc_lower_bessel_p05: np.ndarray
    pc_lower_bessel_p95: np.ndarray
    pc_lower_frechet_mean: float
    pc_lower_bessel_mean: float
    standard_error: float
    eta0: float

    @field_validator(
        "pc_lower_frechet",
        "pc_lower_bessel",
        "pc_lower_bessel_p05",
        "pc_lower_bessel_p95",
        mode="before",
    )
    @classmethod
    def _coerce(cls, v, info):
        return frozen_array(np.clip(v, 0.0, 1.0), ndim=1, name=info.field_name)

    @model_validator(mode="after")
    def _check_range(self):
        scalars = [
            self.pfa_upper,
            self.pd_upper,
            self.pd_lower,
            self.pd_lower_union,
            self.pc_lower_frechet_mean,
            self.pc_lower_bessel_mean,
        ]
        if any(not 0.0 <= value <= 1.0 for value in scalars):
            raise DomainError("Bound values must lie in [0, 1]")
        return self

    @property
    def n_subspaces(self) -> int:
        return len(self.pc_lower_frechet)


def bound_report(
    null_batch: TrialBatch,
    signal_batch: TrialBatch,
    priors: Sequence[float],
    gamma_bar: float,
    eta0: float = 0.25,
    scenario_id: str = "",
    prep: Optional[PreparedUnion] = None,
) -> BoundReport:
    """
    Evaluate every bound at `gamma_bar` from the event probabilities of a
    noise-only batch and a signal batch whose trials carry their active class.

    In the known regime, passing `prep` (the union whitened with the true
    covariance) replaces the Monte-Carlo detection marginals by their
    noncentral chi-square values; the joints stay Monte-Carlo.
    """
    k0 = signal_batch.n_subspaces
    if prep is not None and prep.regime is not signal_batch.regime:
        raise RegimeMismatch(
            f"Prepared union is {prep.regime.value}, trials are {signal_batch.regime.value}"
        )
    threshold = EventSpec(kind=EventKind.THRESHOLD, gamma_bar=gamma_bar)

    if null_batch.regime is NoiseRegime.KNOWN:
        pfa_upper = pfa_union_bound_known(k0, null_batch.subspace_dim, gamma_bar)
    else:
        pfa_upper = pfa_union_bound(
            EventProbabilities.from_indicators(event_indicators(null_batch, threshold))
        )

    detection_events: list[EventProbabilities] = []
    frechet = np.zeros(k0)
    bessel: list[BesselBound] = []
    standard_errors = [np.sqrt(0.25 / len(null_batch))]
    for k in range(k0):
        batch = signal_batch.for_class(k)
        if len(batch) == 0:
            raise TooFewTrials(f"No signal trials were drawn for class {k}")
        detection = EventProbabilities.from_indicators(event_indicators(batch, threshold))
        if prep is not None and prep.regime is NoiseRegime.KNOWN:
            detection = EventProbabilities.from_probabilities(
                known_detection_marginals(prep, batch.whitened_signals, gamma_bar),
                detection.joints,
                detection.trials,
            )
        ratio = EventProbabilities.from_indicators(
            event_indicators(
                batch, EventSpec(kind=EventKind.RATIO, gamma_bar=gamma_bar, reference=k)
            )
        )
        detection_events.append(detection)
        frechet[k] = pc_lower_frechet(ratio)
        bessel.append(
            BesselBound.from_samples(
                bessel_bound_samples(
                    batch.energies,
                    batch.norms,
                    k,
                    batch.sigma2,
                    batch.subspace_dim,
                    float(ratio.marginals[k]),
                    eta0,
                )
            )
        )
        standard_errors.append(float(np.max(detection.marginal_standard_errors)))

    priors = np.asarray(priors, dtype=float)
    pd_upper, pd_lower = pd_bounds(detection_events, priors)
    bessel_means = np.array([b.mean for b in bessel])
    return BoundReport(
        regime=signal_batch.regime,
        gamma_bar=gamma_bar,
        scenario_id=scenario_id,
        pfa_upper=pfa_upper,
        pd_upper=pd_upper,
        pd_lower=pd_lower,
        pd_lower_union=pd_lower_union(detection_events, priors),
        pc_lower_frechet=frechet,
        pc_lower_bessel=bessel_means,
        pc_lower_bessel_p05=np.array([b.p05 for b in bessel]),
        pc_lower_bessel_p95=np.array([b.p95 for b in bessel]),
        pc_lower_frechet_mean=float(np.clip(priors @ frechet, 0.0, 1.0)),
        pc_lower_bessel_mean=float(np.clip(priors @ bessel_means, 0.0, 1.0)),
        standard_error=float(max(standard_errors)),
        eta0=eta0,
    )


def render_bound_report(report: BoundReport) -> str:
    return report_env.get_template("bound_report.jinja").render(report=report)
