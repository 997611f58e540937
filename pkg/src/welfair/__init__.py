"""Welfare-centric fair clustering.

Clusters points carrying group labels under two welfare objectives: the
min-max (worst-off group) objective and the sum-of-group-disutilities
objective, where each group's disutility blends clustering cost with
proportion violations. Provides center heuristics, an assignment LP with a
built-in simplex solver, min-cost-flow rounding with additive guarantees, and
an experiment harness with a CLI.
"""

from .centers import CenterSet, best_of_restarts, kmeanspp_init, lloyd, socially_fair_centers
from .errors import (
    BruteForceSizeError,
    CenterError,
    DataError,
    FlowError,
    InternalInvariantError,
    LPError,
    ParamError,
    WelfairError,
)
from .lp import (
    FractionalSolution,
    LPModel,
    brute_force_assignment,
    build_rawlsian_lp,
    build_utilitarian_lp,
    solve_lp,
    to_lp_text,
)
from .metrics import (
    GroupReport,
    additive_constants,
    approx_constants,
    distance_pow,
    group_costs,
    pairwise_pow,
    socially_fair_cost,
    violation,
    weighted_cost,
)
from .model import (
    Instance,
    Params,
    Solution,
    apply_normalization,
    load_instance,
    normalization_factor,
)
from .pipeline import (
    DominanceReport,
    RunResult,
    dominance_check,
    evaluate_baseline,
    rawlsian_alg,
    utilitarian_alg,
)
from .rounding import (
    FlowNetwork,
    IntegralAssignment,
    build_rawlsian_networks,
    build_utilitarian_network,
    min_cost_flow,
    rawlsian_round,
    utilitarian_round,
)

__version__ = "0.1.0"

__all__ = [
    "BruteForceSizeError",
    "CenterError",
    "CenterSet",
    "DataError",
    "DominanceReport",
    "FlowError",
    "FlowNetwork",
    "FractionalSolution",
    "GroupReport",
    "Instance",
    "IntegralAssignment",
    "InternalInvariantError",
    "LPError",
    "LPModel",
    "ParamError",
    "Params",
    "RunResult",
    "Solution",
    "WelfairError",
    "additive_constants",
    "apply_normalization",
    "approx_constants",
    "best_of_restarts",
    "brute_force_assignment",
    "build_rawlsian_lp",
    "build_rawlsian_networks",
    "build_utilitarian_lp",
    "build_utilitarian_network",
    "distance_pow",
    "dominance_check",
    "evaluate_baseline",
    "group_costs",
    "kmeanspp_init",
    "lloyd",
    "load_instance",
    "min_cost_flow",
    "normalization_factor",
    "pairwise_pow",
    "rawlsian_alg",
    "rawlsian_round",
    "socially_fair_centers",
    "socially_fair_cost",
    "solve_lp",
    "to_lp_text",
    "utilitarian_alg",
    "utilitarian_round",
    "violation",
    "weighted_cost",
]
