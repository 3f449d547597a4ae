from .special import chi2_sf, noncentral_chi2_sf, psi, gaussian_q
from .events import (
    EventKind,
    EventSpec,
    EventProbabilities,
    event_indicators,
    estimate_event_probs,
)
from .union import (
    BesselBound,
    pfa_union_bound,
    pfa_union_bound_known,
    pd_bounds,
    pd_lower_union,
    pc_lower_frechet,
    pc_lower_bessel,
    bessel_bound_samples,
    known_detection_marginals,
)
from .report import BoundReport, bound_report, render_bound_report
