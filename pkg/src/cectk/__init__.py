"""Certainty-equivalence control toolkit.

Finite-horizon convex stochastic programs with hard constraints: a
log-barrier interior-point solver, certainty-equivalent relaxations and the
observed-first-stage variant, re-solving / projection / threshold-hybrid /
myopic policies, seeded Monte Carlo evaluation against the relaxed upper
bound, a network utility-maximization model, and regularity diagnostics.
"""

from .diagnostics import (
    FitReport,
    RegularityReport,
    SweepTable,
    active_set,
    check_licq,
    check_projection_degeneracy,
    check_strict_complementarity,
    diagnose_regularity,
    fit_rates,
    sweep_sigma,
    sweep_theta,
)
from .models import available_models, instance_factory, make_instance
from .network import NetworkParams, build_instance, default_params
from .oracles import AffineOracle, QuadraticOracle, SmoothOracle
from .policies import (
    HybridPolicy,
    MyopicPolicy,
    PolicyState,
    ProjectionPolicy,
    UpdatePolicy,
    make_policy,
    project_onto_stage,
)
from .problem import (
    AffineDynamics,
    Dims,
    EndogenousNoise,
    ExogenousNoise,
    ProblemInstance,
    StageSpec,
    feasible_set,
    validate_instance,
)
from .relaxation import Plan, solve_nominal, solve_observed
from .sampling import RngStream, sample_truncated_normal
from .simulator import EvaluationReport, evaluate, run_episode
from .solver import ConvexProgram, KktSolution, SolverConfig, SolverError, solve

__version__ = "0.1.0"

__all__ = [
    "AffineDynamics", "AffineOracle", "ConvexProgram", "Dims",
    "EndogenousNoise", "EvaluationReport", "ExogenousNoise", "FitReport",
    "HybridPolicy", "KktSolution", "MyopicPolicy", "NetworkParams", "Plan",
    "PolicyState", "ProblemInstance", "ProjectionPolicy", "QuadraticOracle",
    "RegularityReport", "RngStream", "SmoothOracle", "SolverConfig",
    "SolverError", "StageSpec", "SweepTable", "UpdatePolicy", "active_set",
    "available_models", "build_instance", "check_licq",
    "check_projection_degeneracy", "check_strict_complementarity",
    "default_params", "diagnose_regularity", "evaluate", "feasible_set",
    "fit_rates", "instance_factory", "make_instance", "make_policy",
    "project_onto_stage", "run_episode", "sample_truncated_normal", "solve",
    "solve_nominal", "solve_observed", "sweep_sigma", "sweep_theta",
    "validate_instance",
]
