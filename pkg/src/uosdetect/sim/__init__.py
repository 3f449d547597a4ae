from .scenario import (
    Scenario,
    TrialRecord,
    TrialSummary,
    CurvePoint,
    CURVE_COLUMNS,
    isoclinic_subspace,
    reference_path,
    reference_union,
)
from .harness import (
    NULL,
    SIGNAL,
    Stream,
    trial_rng,
    sample_signal,
    simulate,
    simulate_pair,
    calibrate_threshold,
    calibrate_thresholds,
    summarize,
    run_trials,
)
from .experiments import (
    AngleSweepPoint,
    SubspaceGeometryRow,
    GapRow,
    N0Row,
    BaselineRow,
    roc_sweep,
    regime_comparison,
    angle_sweep,
    eigen_aligned_union,
    noise_geometry_experiment,
    gap_experiment,
    n0_sweep,
    baseline_comparison,
    known_prep,
)
