"""Max-min fair throughput allocation for linear TDM data-aggregating networks.

A line of ``n`` nodes sends to a sink at one end, one node at a time within a
frame. The package computes allocations of frame time, transmit power and
node positions that maximize the worst node's throughput (or throughput per
unit of serviced line), under several adaptation strategies.
"""
__version__ = "0.1.0"

from .errors import (
    DegeneratePlacementError,
    InstanceTooLargeError,
    InvalidArgumentError,
    RateUnachievableError,
    TdmFairError,
)
from .model import (
    AREA_MODELS,
    Allocation,
    Diagnostics,
    NetworkConfig,
    Placement,
    ServiceAreas,
    SolveResult,
    capacity,
    capacity_sup,
    rates,
    regular_placement,
    voronoi_areas,
)
from .solvers import (
    CombinedOrder,
    SolverOptions,
    Strategy,
    min_power_for_rate,
    min_time_for_rate,
    parse_scheme,
    solve,
    solve_combined,
    solve_strategy,
    ta_upper_bound,
)
from .oracle import OracleSpec, discretization_bound, grid_oracle
from .experiments import RatioRow, RatioTable, SweepSpec, emit_csv, read_csv, run_sweep
from .kernels import BACKEND

__all__ = [
    "__version__",
    "TdmFairError",
    "InvalidArgumentError",
    "DegeneratePlacementError",
    "RateUnachievableError",
    "InstanceTooLargeError",
    "AREA_MODELS",
    "NetworkConfig",
    "Placement",
    "Allocation",
    "ServiceAreas",
    "Diagnostics",
    "SolveResult",
    "capacity",
    "capacity_sup",
    "rates",
    "regular_placement",
    "voronoi_areas",
    "Strategy",
    "CombinedOrder",
    "SolverOptions",
    "solve_strategy",
    "solve_combined",
    "solve",
    "parse_scheme",
    "min_time_for_rate",
    "min_power_for_rate",
    "ta_upper_bound",
    "OracleSpec",
    "grid_oracle",
    "discretization_bound",
    "SweepSpec",
    "RatioRow",
    "RatioTable",
    "run_sweep",
    "emit_csv",
    "read_csv",
    "BACKEND",
]
