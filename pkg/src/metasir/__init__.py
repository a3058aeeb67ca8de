"""SIR meta distribution, rate-control thresholds and throughput for Poisson bipolar networks."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    LinkRecord,
    NetworkParams,
    Realization,
    ReliabilityTarget,
    conditional_success,
    interference_no_fading,
    threshold_for_reliability,
    threshold_lower_bound_k,
    threshold_partial_info,
)
from .point_process import SamplingConfig, sample_realization  # noqa: E402
from .mc import McConfig, McEstimate  # noqa: E402
