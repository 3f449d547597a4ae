from enum import Enum
from typing import TYPE_CHECKING, Optional

import numpy as np
from pydantic import field_validator, model_validator

from uosdetect.detect import TrialBatch
from uosdetect.errors import DimensionMismatch, DomainError, TooFewTrials
from uosdetect.utilities.general import UoSModel, frozen_array

if TYPE_CHECKING:
    from uosdetect.sim import Scenario

MIN_EVENT_TRIALS = 1000


class EventKind(str, Enum):
    THRESHOLD = "threshold"
    RATIO = "ratio"


class EventSpec(UoSModel):
    """
    A family of K0 events evaluated on every trial.

    - `THRESHOLD`: A_i = {statistic_i > gamma_bar}, one per subspace.
    - `RATIO` for reference class k: slot k is the detection event
      {statistic_k > gamma_bar}; slot j != k is {z'P_k z > z'P_j z}, i.e. the
      ratio event T_z(P_k, P_j) > 1.
    """

    kind: EventKind = EventKind.THRESHOLD
    gamma_bar: float
    reference: Optional[int] = None

    @model_validator(mode="after")
    def _check_reference(self):
        if self.kind is EventKind.RATIO and self.reference is None:
            raise DomainError("Ratio events need a reference class")
        return self


def event_indicators(batch: TrialBatch, spec: EventSpec) -> np.ndarray:
    """Boolean (T, K0) matrix of event occurrences."""
    if spec.kind is EventKind.THRESHOLD:
        return batch.statistics > spec.gamma_bar

    k = spec.reference
    if not 0 <= k < batch.n_subspaces:
        raise DomainError(f"Reference class {k} outside 0..{batch.n_subspaces - 1}")
    indicators = batch.energies[:, [k]] > batch.energies
    indicators[:, k] = batch.statistics[:, k] > spec.gamma_bar
    return indicators


def standard_error(p, trials: int):
    return np.sqrt(np.asarray(p) * (1 - np.asarray(p)) / trials)


class EventProbabilities(UoSModel):
    """
    Monte-Carlo estimates of P(A_i) and P(A_i and A_j). The diagonal of
    `joints` is `marginals` exactly.
    """

    marginals: np.ndarray
    joints: np.ndarray
    trials: int
    standard_errors: np.ndarray

    @field_validator("marginals", mode="before")
    @classmethod
    def _coerce_marginals(cls, v):
        return frozen_array(v, ndim=1, name="marginals")

    @field_validator("joints", "standard_errors", mode="before")
    @classmethod
    def _coerce_matrix(cls, v, info):
        return frozen_array(v, ndim=2, name=info.field_name)

    @model_validator(mode="after")
    def _check(self):
        k0 = len(self.marginals)
        if self.joints.shape != (k0, k0) or self.standard_errors.shape != (k0, k0):
            raise DimensionMismatch("joints and standard errors must be K0 x K0")
        if not np.array_equal(np.diag(self.joints), self.marginals):
            raise DomainError("The diagonal of joints must equal the marginals")
        if np.any(self.joints < 0) or np.any(self.joints > 1):
            raise DomainError("Probabilities must lie in [0, 1]")
        return self

    @classmethod
    def from_probabilities(cls, marginals, joints, trials: int) -> "EventProbabilities":
        joints = np.array(joints, dtype=float)
        np.fill_diagonal(joints, marginals)
        return cls(
            marginals=marginals,
            joints=joints,
            trials=trials,
            standard_errors=standard_error(joints, trials),
        )

    @classmethod
    def from_indicators(cls, indicators: np.ndarray) -> "EventProbabilities":
        trials = indicators.shape[0]
        if trials == 0:
            raise TooFewTrials("No trials to estimate event probabilities from")
        counts = indicators.T.astype(np.int64) @ indicators.astype(np.int64)
        joints = counts / trials
        return cls(
            marginals=np.diag(joints).copy(),
            joints=joints,
            trials=trials,
            standard_errors=standard_error(joints, trials),
        )

    @property
    def marginal_standard_errors(self) -> np.ndarray:
        return np.diag(self.standard_errors)


def estimate_event_probs(
    scenario: "Scenario",
    events: EventSpec,
    hypothesis: Optional[int] = None,
    trials: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> EventProbabilities:
    """
    Estimate event probabilities under H0 (`hypothesis=None`) or with the
    signal in subspace `hypothesis` at the scenario's SNR.
    """
    from uosdetect.sim.harness import NULL, Stream, simulate

    trials = trials or scenario.trials
    if trials < MIN_EVENT_TRIALS:
        raise TooFewTrials(f"Event estimates need >= {MIN_EVENT_TRIALS} trials, got {trials}")
    if rng is not None:
        scenario = scenario.replace(seed=int(rng.integers(2**63)))
    batch = simulate(
        scenario,
        NULL if hypothesis is None else hypothesis,
        stream=Stream.EVENTS,
        trials=trials,
    )
    return EventProbabilities.from_indicators(event_indicators(batch, events))
