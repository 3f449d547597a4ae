from .statistics import (
    stat_quad,
    stat_quad_over_const,
    stat_ratio,
    stat_quad_over_const_plus_norm,
)
from .prepared import (
    PreparedUnion,
    prepare,
    prepare_direct_sum,
    whitened_projectors,
    empirical_whiteners,
)
from .glrt import (
    DetectionOutcome,
    glrt_known,
    glrt_unknown_cov,
    glrt_unknown_stats,
    detect,
    baseline_directsum,
    ml_coefficients,
    quadratic_energies,
    regime_statistics,
)
from .batch import TrialBatch, evaluate_observations
