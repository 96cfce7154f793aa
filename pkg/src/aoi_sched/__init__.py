"""Age-minimizing scheduling for power-constrained sensors over lossy
time-varying channels: per-sensor occupancy-measure LPs, a Lagrangian
dual search for the shared bandwidth, online policies and a slot-based
simulator."""

__version__ = "0.1.0"

from .model import (
    AoiState,
    ChannelModel,
    NetworkSpec,
    SensorSpec,
    gamma,
    load_network,
    network_from_dict,
    network_to_dict,
    sample_channel_state,
    save_network,
    step_aoi,
    transfer_probs,
    validate_channel_model,
)
from .lp import LinearProgram, LpSolution, solve_lp
from .sensor import (
    OccupancyMeasure,
    ThresholdPolicy,
    auto_truncation,
    build_decoupled_lp,
    occupancy_from_policy,
    occupancy_stats,
    oracle_best_threshold_policy,
    recover_policy,
    solve_decoupled,
    steady_state_distribution,
)
from .dual import (
    DualParams,
    RelaxedSolution,
    evaluate_subgradient,
    mix_and_recover,
    mixing_weight,
    search_multipliers,
    solve_relaxed,
)
from .policies import (
    greedy_whittle_schedule,
    relaxed_schedule,
    truncated_schedule,
    whittle_index,
)
from .sim import (
    GreedyWhittlePolicy,
    RelaxedPolicy,
    SimConfig,
    SimMetrics,
    TruncatedPolicy,
    analytic_lower_bound,
    run_replications,
    run_simulation,
)
