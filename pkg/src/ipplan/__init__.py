"""Budget-constrained informative path planning with certified bounds."""

from .belief import (
    Belief,
    KernelSpec,
    Measurement,
    SensorModel,
    build_prior,
    default_characterization,
    kernel_form_posterior,
    kernel_matrix,
    posterior_cov,
    posterior_mean,
    update,
)
from .bounds import (
    BoundReport,
    ExactResult,
    RelaxResult,
    exact_small,
    gap,
    relax_and_round,
    relax_lower_bound,
    round_weights_to_path,
)
from .envgraph import (
    EnvGraph,
    EnumerationResult,
    PathEncoding,
    ValidationResult,
    build_graph,
    build_grid,
    enumerate_feasible_paths,
    graph_from_json,
    graph_to_json,
    random_feasible_path,
    shortest_costs_to_goal,
    validate_path,
)
from .errors import (
    BoundInconsistencyError,
    InfeasibleBudgetError,
    IpplanError,
    NumericalError,
)
from .harness import (
    ExperimentConfig,
    Instance,
    build_instance,
    gap_study,
    run_experiment,
    sample_ground_truth,
    sample_interest_map,
    validate_reports,
)
from .multiagent import FleetReport, plan_fleet
from .objectives import (
    DesignWeights,
    Objective,
    design_precision,
    eval_belief,
    eval_design,
    eval_ei,
    eval_ei_prediction,
    grad_design,
    mutual_information,
)
from .planner import (
    PlannerConfig,
    SolveReport,
    ValueTable,
    aspo_plan,
    dp_orienteering,
    greedy_baseline,
    node_rewards,
    random_baseline,
)
from .refine import SensorAssignment, assignment_objective, polish, select_sensors

__version__ = "0.1.0"

__all__ = [
    "Belief",
    "BoundInconsistencyError",
    "BoundReport",
    "DesignWeights",
    "EnumerationResult",
    "EnvGraph",
    "ExactResult",
    "ExperimentConfig",
    "FleetReport",
    "InfeasibleBudgetError",
    "Instance",
    "IpplanError",
    "KernelSpec",
    "Measurement",
    "NumericalError",
    "Objective",
    "PathEncoding",
    "PlannerConfig",
    "RelaxResult",
    "SensorAssignment",
    "SensorModel",
    "SolveReport",
    "ValidationResult",
    "ValueTable",
    "aspo_plan",
    "assignment_objective",
    "build_graph",
    "build_grid",
    "build_instance",
    "build_prior",
    "default_characterization",
    "design_precision",
    "dp_orienteering",
    "enumerate_feasible_paths",
    "eval_belief",
    "eval_design",
    "eval_ei",
    "eval_ei_prediction",
    "exact_small",
    "gap",
    "gap_study",
    "grad_design",
    "graph_from_json",
    "graph_to_json",
    "greedy_baseline",
    "kernel_form_posterior",
    "kernel_matrix",
    "mutual_information",
    "node_rewards",
    "plan_fleet",
    "polish",
    "posterior_cov",
    "posterior_mean",
    "random_baseline",
    "random_feasible_path",
    "relax_and_round",
    "relax_lower_bound",
    "round_weights_to_path",
    "run_experiment",
    "sample_ground_truth",
    "sample_interest_map",
    "select_sensors",
    "shortest_costs_to_goal",
    "update",
    "validate_path",
    "validate_reports",
]
