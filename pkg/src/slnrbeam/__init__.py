"""Statistical SLNR-based transmit beamforming for full-dimensional massive MIMO.

The library designs covariance-only (statistical) transmit beamformers for a
base station with a square antenna array serving single-antenna downlink
users, and evaluates the users' ergodic rates and fairness metrics. Three
iterative designs are provided, all driven by the signal-to-leakage-plus-noise
ratio (SLNR): a convex-subproblem max-min design, a geometric-mean design with
closed-form updates, and a smoothed (soft) max-min design with closed-form
updates, plus a uniform-power generalized-eigenvector baseline.
"""

from .channel import (
    ChannelStatistics,
    Scenario,
    UserGeometry,
    build_statistics,
    covariance_pair,
    horizontal_correlation,
    pathloss_db,
    place_users,
    sample_channel,
    vertical_correlation,
)
from .beamformer import (
    BeamformerSet,
    beamformer_matrix,
    coupling_matrix,
    full_beamformer,
    init_feasible,
    psi_matrix,
    total_power,
)
from .metrics import (
    RateReport,
    ergodic_rate_closed,
    ergodic_rate_mc,
    instantaneous_sinr,
    jain_index,
    min_max_ratio,
    nats_to_mbps,
    rate_report,
    slnr,
    slnr_vec,
)
from .optimizers import (
    AlgoOptions,
    OptimizationResult,
    baseline_uniform,
    closed_form_update,
    run_gm,
    run_maxmin,
    run_soft,
)

__all__ = [
    "AlgoOptions",
    "BeamformerSet",
    "ChannelStatistics",
    "OptimizationResult",
    "RateReport",
    "Scenario",
    "UserGeometry",
    "baseline_uniform",
    "beamformer_matrix",
    "build_statistics",
    "closed_form_update",
    "coupling_matrix",
    "covariance_pair",
    "ergodic_rate_closed",
    "ergodic_rate_mc",
    "full_beamformer",
    "horizontal_correlation",
    "init_feasible",
    "instantaneous_sinr",
    "jain_index",
    "min_max_ratio",
    "nats_to_mbps",
    "pathloss_db",
    "place_users",
    "psi_matrix",
    "rate_report",
    "run_gm",
    "run_maxmin",
    "run_soft",
    "sample_channel",
    "slnr",
    "slnr_vec",
    "total_power",
    "vertical_correlation",
]
