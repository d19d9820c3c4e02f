"""Evolutionary models of polarization under shifting environments.

Two models of individuals choosing between safe in-group and risky, more
rewarding out-group interactions: a fixed-risk model and a social-risk model
in which out-group success also depends on the partner's willingness.
"""
from .model import (
    BenefitCurve,
    DomainError,
    InteractionParams,
    OutcomeTally,
    expected_fitness_fixed,
    expected_fitness_social,
    expected_linear_benefit,
    fitness_kernel,
    outcome_probability,
)
from .equilibrium import (
    FIXED,
    SOCIAL,
    find_singular_points,
    gradient_field,
    invasion_fitness,
    optimal_strategy,
    pip,
    selection_gradient,
    sweep,
)
from .simulation import (
    EnvironmentSchedule,
    SimConfig,
    run_ensemble,
    run_trajectory,
)

__version__ = "0.1.0"

__all__ = [
    "BenefitCurve", "DomainError", "InteractionParams", "OutcomeTally",
    "expected_fitness_fixed", "expected_fitness_social", "expected_linear_benefit",
    "fitness_kernel", "outcome_probability",
    "FIXED", "SOCIAL", "find_singular_points", "gradient_field", "invasion_fitness",
    "optimal_strategy", "pip", "selection_gradient", "sweep",
    "EnvironmentSchedule", "SimConfig", "run_ensemble", "run_trajectory",
]
