"""Collective-wisdom dynamics: optimal susceptibility profiles for opinion
averaging on networks, and the distributed gradient flow that learns them."""

from .graph import (
    CentralityVector,
    NotStronglyConnectedError,
    WeightedDigraph,
    ZeroRowError,
    centrality,
    from_edges,
    has_self_loops,
    is_strongly_connected,
    laplacian,
    row_normalize,
)
from .learning import (
    HullViolationError,
    IsolatedAgentError,
    LearnDiagnostics,
    LearnResult,
    LearningProblem,
    YState,
    coupling_matrix,
    equilibrium_check,
    from_y,
    learn,
    local_utility,
    to_y,
    utility_gradient,
    y_rhs,
    z_rhs,
)
from .ode import (
    IntegrationError,
    IntegratorOptions,
    MaxStepsExceededError,
    StepFailureError,
    Termination,
    Trajectory,
    integrate,
    integrate_until,
)
from .opinion import (
    DimensionMismatchError,
    MonteCarloResult,
    NoiseModel,
    NonPositiveInputError,
    SusceptibilityProfile,
    abelson_rhs,
    consensus_variance,
    consensus_weights,
    distance_to_optimal,
    monte_carlo_variance,
    optimal_profile,
    optimal_variance,
    predict_consensus,
    simulate_opinions,
)
from .experiments import (
    FigureCheckError,
    ReferenceExample,
    build_reference_example,
    dissensus_groups,
    reproduce_y_consensus,
    reproduce_z_dissensus,
    sample_z0,
)

__version__ = "0.1.0"

__all__ = [
    "CentralityVector",
    "DimensionMismatchError",
    "FigureCheckError",
    "HullViolationError",
    "IntegrationError",
    "IntegratorOptions",
    "IsolatedAgentError",
    "LearnDiagnostics",
    "LearnResult",
    "LearningProblem",
    "MaxStepsExceededError",
    "MonteCarloResult",
    "NoiseModel",
    "NonPositiveInputError",
    "NotStronglyConnectedError",
    "ReferenceExample",
    "StepFailureError",
    "SusceptibilityProfile",
    "Termination",
    "Trajectory",
    "WeightedDigraph",
    "YState",
    "ZeroRowError",
    "abelson_rhs",
    "build_reference_example",
    "centrality",
    "consensus_variance",
    "consensus_weights",
    "coupling_matrix",
    "dissensus_groups",
    "distance_to_optimal",
    "equilibrium_check",
    "from_edges",
    "from_y",
    "has_self_loops",
    "integrate",
    "integrate_until",
    "is_strongly_connected",
    "laplacian",
    "learn",
    "local_utility",
    "monte_carlo_variance",
    "optimal_profile",
    "optimal_variance",
    "predict_consensus",
    "reproduce_y_consensus",
    "reproduce_z_dissensus",
    "row_normalize",
    "sample_z0",
    "simulate_opinions",
    "to_y",
    "utility_gradient",
    "y_rhs",
    "z_rhs",
]
