"""Sampled-data safety filtering with certified hold periods.

The library wraps a control-barrier-function safety filter, a boosted
variant that buys robustness to zero-order hold, regional bound estimation
with the resulting hold-period budgets, and a simulator with periodic and
event-triggered schedules. ``safehold.acc_benchmark`` instantiates the
whole stack on an adaptive cruise control plant.
"""

from .errors import (
    SafeholdError,
    ConfigurationError,
    InfeasibleFilterError,
    DivergenceError,
    RegionExitError,
    BoundarySamplingError,
)
from .cbf_core import (
    ClassKappa,
    SigmoidGain,
    IssfExpansion,
    ControlAffineDynamics,
    BarrierFunction,
    lie_derivatives,
    barrier_margin,
    sigmoid_gain,
    amplified_alpha,
    expanded_barrier,
    expanded_alpha,
)
from .safety_filter import (
    NominalController,
    CbfQpFilter,
    solve_cbf_qp,
    adjusted_control,
    tunable_control,
    TunableControllerConfig,
    TuningCheck,
    TuningReport,
    validate_tuning,
)
from .constants import (
    OperatingRegion,
    BoundSet,
    AssumptionCheck,
    AssumptionReport,
    boundary_points,
    estimate_bounds,
    check_assumptions,
    error_bound_plain,
    error_bound_tunable,
    practical_sampling_time,
    violation_free_sampling_time,
)
from .simulator import (
    IntegratorConfig,
    HoldSchedule,
    Trace,
    RunSummary,
    Scenario,
    rk4_step,
    rk4_step_closed_loop,
    integrate_held,
    trigger_value,
    run,
    analyze,
)
from .acc_benchmark import (
    AccParams,
    acc_dynamics,
    acc_barrier,
    acc_nominal,
    acc_filter,
    acc_closed_form_lie,
    approach_region,
    ride_region,
    thin_band_tuning,
    wide_band_tuning,
    certified_tuning,
    build_scenario,
    acc_scenarios,
)
from .config import (
    RunConfig,
    parse_config,
    load_config,
    dump_config,
    save_config,
    apply_overrides,
    scenario_from_config,
    default_region,
)

__version__ = "0.1.0"

__all__ = [
    "SafeholdError",
    "ConfigurationError",
    "InfeasibleFilterError",
    "DivergenceError",
    "RegionExitError",
    "BoundarySamplingError",
    "ClassKappa",
    "SigmoidGain",
    "IssfExpansion",
    "ControlAffineDynamics",
    "BarrierFunction",
    "lie_derivatives",
    "barrier_margin",
    "sigmoid_gain",
    "amplified_alpha",
    "expanded_barrier",
    "expanded_alpha",
    "NominalController",
    "CbfQpFilter",
    "solve_cbf_qp",
    "adjusted_control",
    "tunable_control",
    "TunableControllerConfig",
    "TuningCheck",
    "TuningReport",
    "validate_tuning",
    "OperatingRegion",
    "BoundSet",
    "AssumptionCheck",
    "AssumptionReport",
    "boundary_points",
    "estimate_bounds",
    "check_assumptions",
    "error_bound_plain",
    "error_bound_tunable",
    "practical_sampling_time",
    "violation_free_sampling_time",
    "IntegratorConfig",
    "HoldSchedule",
    "Trace",
    "RunSummary",
    "Scenario",
    "rk4_step",
    "rk4_step_closed_loop",
    "integrate_held",
    "trigger_value",
    "run",
    "analyze",
    "AccParams",
    "acc_dynamics",
    "acc_barrier",
    "acc_nominal",
    "acc_filter",
    "acc_closed_form_lie",
    "approach_region",
    "ride_region",
    "thin_band_tuning",
    "wide_band_tuning",
    "certified_tuning",
    "build_scenario",
    "acc_scenarios",
    "RunConfig",
    "parse_config",
    "load_config",
    "dump_config",
    "save_config",
    "apply_overrides",
    "scenario_from_config",
    "default_region",
    "__version__",
]
