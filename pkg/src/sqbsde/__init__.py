"""Superquadratic BSDE and coupled path-dependent FBSDE solvers with certified constants."""

__version__ = "0.1.0"

from .catalog import catalog_names, lookup_catalog
from .config import RunConfig, load_config, parse_config
from .constants import PartitionPlan, plan_partition, rho, rho_fb
from .errors import SolverError
from .global_bsde import (
    GlobalSolution,
    solve_diagonal_quadratic,
    solve_global_lipschitz_g,
    solve_global_superquadratic,
    solve_perturbed,
)
from .paths import PathBundle, TimeGrid, simulate_brownian
from .problem import ProblemSpec, audit_assumptions
from .reflection import ReflectionSpec, reflected_sde, skorokhod_1d, skorokhod_polyhedral
from .regression import FeatureBasis, solve_lipschitz_bsde

__all__ = [
    "__version__",
    "catalog_names",
    "lookup_catalog",
    "RunConfig",
    "load_config",
    "parse_config",
    "PartitionPlan",
    "plan_partition",
    "rho",
    "rho_fb",
    "SolverError",
    "GlobalSolution",
    "solve_diagonal_quadratic",
    "solve_global_lipschitz_g",
    "solve_global_superquadratic",
    "solve_perturbed",
    "PathBundle",
    "TimeGrid",
    "simulate_brownian",
    "ProblemSpec",
    "audit_assumptions",
    "ReflectionSpec",
    "reflected_sde",
    "skorokhod_1d",
    "skorokhod_polyhedral",
    "FeatureBasis",
    "solve_lipschitz_bsde",
]
