"""Analytical design and simulation of demand-responsive feeder services."""

from .params import (
    PRESETS,
    ScenarioParams,
    ZoneGrid,
    ZoneIndex,
    line_haul_distance,
    load_scenario,
    make_grid,
    table2_params,
)
from .tourlength import (
    CalibrationGrid,
    CalibrationResult,
    KStarModel,
    TABLE1_MODEL,
    calibrate_kstar,
    kstar,
)
from .costs import (
    FULLY_FLEXIBLE,
    SEMI_FLEXIBLE,
    CostBreakdown,
    DesignSolution,
    InfeasibleDesignError,
    ZoneDesign,
    total_generalized_cost,
)
from .optimizer import (
    OptimizationResult,
    SearchSpace,
    compare_strategies,
    search_design,
)
from .simulator import (
    DemandRealization,
    SimRun,
    ValidationReport,
    generate_demand,
    run_validation,
    simulate_ff_hour,
    simulate_sf_hour,
)
from .experiments import (
    BracketError,
    CampaignResult,
    SweepRow,
    SweepSpec,
    apply_axis,
    default_scenario_grid,
    find_critical_density,
    run_sweep,
    run_validation_campaign,
    sweep_to_csv,
)

__all__ = [
    "PRESETS",
    "ScenarioParams",
    "ZoneGrid",
    "ZoneIndex",
    "line_haul_distance",
    "load_scenario",
    "make_grid",
    "table2_params",
    "CalibrationGrid",
    "CalibrationResult",
    "KStarModel",
    "TABLE1_MODEL",
    "calibrate_kstar",
    "kstar",
    "FULLY_FLEXIBLE",
    "SEMI_FLEXIBLE",
    "CostBreakdown",
    "DesignSolution",
    "InfeasibleDesignError",
    "ZoneDesign",
    "total_generalized_cost",
    "OptimizationResult",
    "SearchSpace",
    "compare_strategies",
    "search_design",
    "DemandRealization",
    "SimRun",
    "ValidationReport",
    "generate_demand",
    "run_validation",
    "simulate_ff_hour",
    "simulate_sf_hour",
    "BracketError",
    "CampaignResult",
    "SweepRow",
    "SweepSpec",
    "apply_axis",
    "default_scenario_grid",
    "find_critical_density",
    "run_sweep",
    "run_validation_campaign",
    "sweep_to_csv",
]

__version__ = "0.1.0"
