"""Reallocate elastic demand between adjacent time slots of historical
demand series so that every slot varies less across series."""

from .cost import (
    CostReport,
    Scenario,
    ScenarioSet,
    cost_breakdown,
    expected_cost,
    load_scenarios,
    scenario_cost,
    scenario_slot_costs,
)
from .datagen import SplitMix64, default_profile, simulate_panel
from .l1 import l1_objective, solve_l1
from .oracle import OracleResult, grid_search
from .panel import (
    ConservationReport,
    DemandPanel,
    ForecastVector,
    InfeasibleBoundsError,
    PanelStats,
    ShiftBounds,
    ShiftedPanel,
    ShiftPlan,
    apply_shift,
    check_conservation,
    optimal_forecast,
    panel_stats,
)
from .qp import qp_objective, solve_qp
from .solver import SolveReport, SolverConfig
from .sweep import SweepRow, run_sweep, sweep_to_csv

__version__ = "0.1.0"
