"""Secret-key generation from sparse wideband channels with a correlated eavesdropper."""

__version__ = "0.1.0"

from .core_model import (  # noqa: E402
    ChannelConfig,
    ConfigError,
    DofCounts,
    DofPmf,
    dof_pmf,
    eve_transitions,
    sample_dof,
    sparsity_probability,
    state_entropy_bonus,
)
from .ergodic import (  # noqa: E402
    OnOffResult,
    RatePoint,
    ergodic_rate,
    inst_rate,
    onoff_optimize,
    sweep,
    wideband_approx,
)
from .outage import (  # noqa: E402
    BackoffSpec,
    OutageReport,
    backoff_threshold,
    exponent_curve,
    kl_bernoulli,
    outage_bound,
    outage_exact,
    outage_exponent,
)

__all__ = [
    "BackoffSpec",
    "ChannelConfig",
    "ConfigError",
    "DofCounts",
    "DofPmf",
    "OnOffResult",
    "OutageReport",
    "RatePoint",
    "backoff_threshold",
    "dof_pmf",
    "ergodic_rate",
    "eve_transitions",
    "exponent_curve",
    "inst_rate",
    "kl_bernoulli",
    "onoff_optimize",
    "outage_bound",
    "outage_exact",
    "outage_exponent",
    "sample_dof",
    "sparsity_probability",
    "state_entropy_bonus",
    "sweep",
    "wideband_approx",
]
