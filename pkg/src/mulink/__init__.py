"""Link-level simulator for multi-antenna downlink transmission.

The package compares two ways of serving users that carry more antennas
than they receive streams: multi-stream multiplexing to few users (block
diagonalisation, per-eigenmode transmission) versus receive combining
across many users (effective single-antenna channels plus zero forcing).
Channel acquisition can be perfect, quantized through random vector
codebooks, or estimated from uplink pilots; closed-form performance
expressions live in :mod:`mulink.analytics` next to their Monte Carlo
counterparts.
"""

from .analytics import (
    AsymptoticDifference,
    BetaEstimate,
    BitRule,
    BoundReport,
    EffectiveGainStats,
    beta_bd_zfc,
    beta_heterogeneous_upper,
    digamma,
    distortion_bd,
    distortion_qbc,
    expected_effective_gain,
    feedback_bit_law,
    mc_beta_bd_zfc,
    mc_effective_channel_stats,
    qbc_gain,
    quantization_bit_rule,
    rate_loss_bound,
    scheduling_loss_bounds,
    separate_eigenvalues,
    training_power_law,
)
from .channel import (
    CellGeometry,
    CellUsers,
    correlation_sqrt,
    draw_cell_users,
    draw_channel,
    exp_correlation,
    rotate_correlation_sqrt,
)
from .combining import mesc, mmse_combiner, mrc, qbc
from .csi import (
    Codebook,
    TrainingConfig,
    chordal_distance,
    mmse_estimate,
    quantize_subspace,
    row_space_basis,
    rvq_codebook,
    simulate_uplink,
    training_matrix,
)
from .errors import (
    ConfigError,
    DegenerateScheduleError,
    DomainError,
    NumericError,
    ResourceLimitError,
)
from .precoding import (
    PrecodePlan,
    bd_precoder,
    met_precoder,
    null_space_basis,
    su_svd_precoder,
    waterfill,
    zfc_precoder,
)
from .rates import (
    RateRecord,
    asymptotic_offset,
    multiplexing_gain_fit,
    rate_general,
    sum_rate,
)
from .scheduling import (
    ScheduleResult,
    cbsus,
    random_schedule,
    stat_preselect,
    stream_histogram,
)

__version__ = "0.1.0"

__all__ = [
    "AsymptoticDifference",
    "BetaEstimate",
    "BitRule",
    "BoundReport",
    "CellGeometry",
    "CellUsers",
    "Codebook",
    "ConfigError",
    "DegenerateScheduleError",
    "DomainError",
    "EffectiveGainStats",
    "NumericError",
    "PrecodePlan",
    "RateRecord",
    "ResourceLimitError",
    "ScheduleResult",
    "TrainingConfig",
    "asymptotic_offset",
    "bd_precoder",
    "beta_bd_zfc",
    "beta_heterogeneous_upper",
    "cbsus",
    "chordal_distance",
    "correlation_sqrt",
    "digamma",
    "distortion_bd",
    "distortion_qbc",
    "draw_cell_users",
    "draw_channel",
    "exp_correlation",
    "expected_effective_gain",
    "feedback_bit_law",
    "mc_beta_bd_zfc",
    "mc_effective_channel_stats",
    "mesc",
    "met_precoder",
    "mmse_combiner",
    "mmse_estimate",
    "mrc",
    "multiplexing_gain_fit",
    "null_space_basis",
    "qbc",
    "qbc_gain",
    "quantization_bit_rule",
    "quantize_subspace",
    "random_schedule",
    "rate_general",
    "rate_loss_bound",
    "rotate_correlation_sqrt",
    "row_space_basis",
    "rvq_codebook",
    "scheduling_loss_bounds",
    "separate_eigenvalues",
    "simulate_uplink",
    "stat_preselect",
    "stream_histogram",
    "su_svd_precoder",
    "sum_rate",
    "training_matrix",
    "training_power_law",
    "waterfill",
    "zfc_precoder",
    "__version__",
]
