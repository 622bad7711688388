"""Downlink TX-power planning for cellular networks with nomadic base stations.

Deterministic link-budget simulator (SUI path loss, sector antennas,
SINR, CQI-based link adaptation, round-robin sharing) plus a genetic
TX-power optimizer and two neighborhood-selection strategies for
reconfiguring a network after a nomadic site is added.
"""

__version__ = "0.1.0"

from .network import (
    Cell,
    EvaluationResult,
    Position,
    PowerAssignment,
    PowerDomain,
    Scenario,
    UE,
    add_nomadic_site,
    associate_best_sinr,
    associate_nearest,
    evaluate,
    generate_honeycomb,
    generate_ue_grid,
    initial_assignment,
    load_topology,
    save_topology,
)
from .neighborhood import (
    CircleSchedule,
    ReconfigReport,
    SamplingConfig,
    cells_within,
    iterative_range_reconfigure,
    noise_reach_radius,
    sampling_reconfigure,
    sampling_select,
)
from .optimize import (
    GaConfig,
    OptimizeOutcome,
    count_changed,
    global_reconfigure,
    local_reconfigure,
    objective,
    sga_optimize,
)
from .radio import McsEntry, RadioConfig, SuiTerrain

__all__ = [
    "Cell",
    "CircleSchedule",
    "EvaluationResult",
    "GaConfig",
    "McsEntry",
    "OptimizeOutcome",
    "Position",
    "PowerAssignment",
    "PowerDomain",
    "RadioConfig",
    "ReconfigReport",
    "SamplingConfig",
    "Scenario",
    "SuiTerrain",
    "UE",
    "add_nomadic_site",
    "associate_best_sinr",
    "associate_nearest",
    "cells_within",
    "count_changed",
    "evaluate",
    "generate_honeycomb",
    "generate_ue_grid",
    "global_reconfigure",
    "initial_assignment",
    "iterative_range_reconfigure",
    "load_topology",
    "local_reconfigure",
    "noise_reach_radius",
    "objective",
    "sampling_reconfigure",
    "sampling_select",
    "save_topology",
    "sga_optimize",
]
