"""Timing-based raw key extraction for energy-time entanglement QKD.

Four frame encodings (simple binning, adaptive binning, adaptive
aggregated binning, adaptive framing) under a Bernoulli photon-arrival
model, with closed-form rates, exhaustive and Monte Carlo cross-checks,
and a paired Alice/Bob protocol runner.
"""

from .arrival import (
    Frame,
    ModelParams,
    RngStream,
    bin_occupancy_probs,
    binary_entropy,
    photon_count,
    sample_frame,
    sample_frames,
)
from .errors import (
    BudgetError,
    ConfigurationError,
    DomainError,
    KeyAgreementError,
    ProtocolError,
    SerializationError,
    TimebinError,
)
from .oracle import enumerate_rate, monte_carlo_rate, partition_bound_check
from .rates import (
    TimingParams,
    effective_rate,
    rate_aab,
    rate_adaptive_binning,
    rate_af,
    rate_simple_binning,
    raw_rate,
    utilization,
)
from .schemes import (
    AssignmentMessage,
    KeyMaterial,
    Scheme,
    aab_encode,
    adaptive_binning_encode,
    af_encode,
    decode_with_assignment,
    simple_binning_encode,
    subframe_sizes,
)
from .session import SessionConfig, SessionReport, deserialize_message, run_session, serialize_message

__version__ = "0.1.0"
