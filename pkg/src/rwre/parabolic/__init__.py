"""Discrete parabolic operator, Dirichlet solver and maximum-principle checks."""
from .abp import explicit_constant, step2_constant
from .domain import (MaxPrincipleReport, ParabolicDomain, adversarial_forcing, apply_L, forcing_norm,
                     residual, solve_dirichlet, sup_ratio, verify_max_principle)
from .contact import (ContactSet, contact_sets, lambda_inclusion_check, l_star, polytope_volume,
                      sample_cone, step2_bound_check)
from .battery import grid_battery, grid_cases, grid_vectors, random_battery, run_grid_case, run_instance, summarize
from .continuous import UniformizedCheck, uniformized_max_principle

__all__ = [
    "explicit_constant", "step2_constant", "MaxPrincipleReport", "ParabolicDomain", "adversarial_forcing",
    "apply_L", "forcing_norm", "residual", "solve_dirichlet", "sup_ratio", "verify_max_principle",
    "ContactSet", "contact_sets", "lambda_inclusion_check", "l_star", "polytope_volume", "sample_cone",
    "step2_bound_check", "grid_battery", "grid_cases", "grid_vectors", "random_battery", "run_grid_case",
    "run_instance", "summarize", "UniformizedCheck", "uniformized_max_principle",
]
