"""Desk-scale laboratory for the frontier of branching Brownian motion.

Exact tube-probability analytics plus a pruned, reproducible Monte Carlo
particle engine for consistent-maximal-displacement statistics.
"""

from .curves import (
    CONSTANTS,
    DISPLACEMENT_CRITICAL,
    NEVER,
    SQRT2,
    SURVIVAL_CRITICAL,
    TUNED_GROWTH,
    TUNED_WIDTH,
    Constant,
    Curve,
    Linear,
    LogPowerForward,
    PowerBackward,
    PowerForward,
    curvature_bound,
    energy_functional,
    intrinsic_clock_time,
    inverse_square_width_integral,
    log_tuned_width_expansion,
    make_curves,
)
from .engine import (
    PairMomentEstimate,
    ParticleState,
    ParticleStatus,
    PopulationResult,
    TrajectoryOutcome,
    TubeScenario,
    absorbed_count_at_line,
    correlated_pair_estimate,
    simulate,
    simulate_population,
    single_particle_tube_weights,
    yule_pair_moment,
)
from .errors import (
    BudgetExceeded,
    ConfigError,
    DegenerateFit,
    DomainError,
    FrontierLabError,
    ParamError,
    QuadratureFailure,
    SeriesDivergenceGuard,
)
from .estimators import (
    MCEstimate,
    TailRow,
    TailTable,
    displacement_checkpoints,
    displacement_median_band,
    displacement_quantiles,
    jaffuel_survival,
    lambda_tail,
    many_to_one_check,
    neveu_summary,
    replicas_for_halfwidth,
    tail_slope_fit,
    wilson_interval,
)
from .stochastic_kernels import (
    RandomStream,
    branch_time,
    bridge_lower_cross_prob,
    bridge_min_sample,
    gaussian_increment,
)
from .tube_analytics import (
    EnvelopePair,
    WindowSpec,
    displacement_tail_shape,
    fixed_tube_probability,
    moving_tube_envelope,
    moving_tube_short_time_bound,
    predicted_top_window_count,
    top_window_shape,
    top_window_shape_short_time,
)

__version__ = "0.1.0"
