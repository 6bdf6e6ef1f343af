"""Siting backup generation on a small grid under correlated temperature risk.

The package is organized as a pipeline:

``grid``      instance data model: buses, lines, generators, and the
              temperature response of demand and generator availability.
``weather``   correlated temperature-anomaly sampling, including
              tail-conditioned stratified designs.
``dispatch``  single-scenario recourse: min-cost dispatch with load
              shedding on a transportation network.
``lp``        dense bounded-variable simplex used by the siting master.
``saa``       sample-average siting: exhaustive and Benders-style solvers,
              CVaR risk shaping.
``frontier``  out-of-sample evaluation and cost-risk frontier sweeps.
``cli``       command-line front end (``gridsite ...``).
"""

from .dispatch import (
    DispatchEngine,
    DispatchError,
    InfeasibleNetworkError,
    SitingDecision,
    build_network,
    cut_coefficients,
    dispatch,
    solve_min_cost_flow,
)
from .frontier import (
    EvalConfig,
    FrontierPoint,
    TrainingSampler,
    evaluate_oos,
    frontier_to_csv,
    pareto_filter,
    sweep,
    tail_average,
)
from .grid import (
    Bus,
    GeneratorSpec,
    GridInstance,
    InstanceError,
    Line,
    ParseError,
    ResponseParams,
    ValidationError,
    available_capacity,
    demand_at,
    load_instance,
    realize_availability,
    realize_demands,
    serialize,
    temperature_deviation,
)
from .lp import LpProblem, LpSolution, solve_lp
from .saa import (
    SolveConfig,
    Solution,
    TooManySitesError,
    cvar,
    evaluate_first_stage,
    solve_enumeration,
    solve_lshaped,
)
from .weather import (
    Scenario,
    ScenarioSet,
    SpatialModel,
    StratificationPlan,
    build_covariance,
    cholesky,
    sample_iid,
    sample_stratified,
    sample_truncated_normal,
    scenarios_to_csv,
)

__version__ = "0.1.0"

__all__ = [
    "Bus",
    "DispatchEngine",
    "DispatchError",
    "EvalConfig",
    "FrontierPoint",
    "GeneratorSpec",
    "GridInstance",
    "InfeasibleNetworkError",
    "InstanceError",
    "Line",
    "LpProblem",
    "LpSolution",
    "ParseError",
    "ResponseParams",
    "Scenario",
    "ScenarioSet",
    "SitingDecision",
    "SolveConfig",
    "Solution",
    "SpatialModel",
    "StratificationPlan",
    "TooManySitesError",
    "TrainingSampler",
    "ValidationError",
    "available_capacity",
    "build_covariance",
    "build_network",
    "cholesky",
    "cut_coefficients",
    "cvar",
    "demand_at",
    "dispatch",
    "evaluate_first_stage",
    "evaluate_oos",
    "frontier_to_csv",
    "load_instance",
    "pareto_filter",
    "realize_availability",
    "realize_demands",
    "sample_iid",
    "sample_stratified",
    "sample_truncated_normal",
    "scenarios_to_csv",
    "serialize",
    "solve_enumeration",
    "solve_lp",
    "solve_lshaped",
    "solve_min_cost_flow",
    "sweep",
    "tail_average",
    "temperature_deviation",
    "__version__",
]
