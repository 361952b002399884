"""Simulation and verification toolkit for jump Wright-Fisher models.

The package simulates a [0,1]-valued jump process with frequency-dependent
selection and environmental shocks together with its order dual, classifies
the long-run boundary behavior from the model parameters, estimates fixation
probabilities through the dual's renewal structure, and checks the pathwise
boundary bounds by explicit comparison processes.
"""

from .background import (
    ENV,
    NEUTRAL,
    BackgroundConfig,
    JumpEvent,
    RandomBackground,
    build_background,
    filtered_view,
    mirror_view,
)
from .dual import (
    CoupledPair,
    detect_renewal,
    detect_renewal_general,
    m_map,
    s_map,
    simulate_coupled_pair,
    simulate_y,
    simulate_y_capped,
)
from .errors import (
    ConfigError,
    DomainError,
    HorizonExceeded,
    InfiniteRate,
    InternalConsistencyError,
    InvalidGamma,
    LwfError,
    NegativeDiscriminant,
    NonIntegrable,
    ParameterError,
    WrongRegime,
)
from .forward import (
    Trajectory,
    default_drift_step,
    drift_flow_x,
    simulate_x,
    step_x_env,
    step_x_neutral,
)
from .levy import (
    LevySpec,
    SandwichReport,
    laplace_exponent,
    levy_drift,
    levy_increment,
    mean_increment,
    sandwich_check,
    simulate_levy,
)
from .measures import (
    MeasureSpec,
    ModelParams,
    RegimeReport,
    SelectionFn,
    coalescence_impact,
    compute_c0,
    compute_c1,
    integrability_report,
    integrate_against,
    s_gamma,
    w_gamma,
)

__version__ = "0.1.0"

# estimation layer (imported late: it builds on everything above)
from .batch import (  # noqa: E402
    coupled_paths,
    occupation_window,
    paths_at_times,
    renewal_cycles,
)
from .config import RunConfig, load_config  # noqa: E402
from .estimators import (  # noqa: E402
    DualityCell,
    EstimateWithCI,
    check_duality,
    check_two_trajectory_duality,
    decay_rate_experiment,
    estimate_fixation_direct,
    estimate_fixation_renewal,
    estimate_stationary_y,
    merge_decay_curve,
    sandwich_mc,
)
from .levy import PassageTailReport, levy_unit_samples, passage_tail  # noqa: E402
from .manifest import RunManifest  # noqa: E402
