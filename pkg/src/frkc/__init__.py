"""Factorized Runge-Kutta-Chebyshev integrators for stiff parabolic problems."""

from .composition import ButcherTableau, FRKC4Scheme, build_frkc4, frkc4_step, solve_finishing
from .integrator import (
    IntegrationConfig,
    IntegrationStats,
    SchemeTable,
    SemiDiscreteSystem,
    frkc2_step,
    integrate,
)
from .polynomial import ConstructionError, StabilityPolynomial, find_roots, maximize_alpha
from .problems import get_problem
from .scheme import SchemeCoefficients, build_scheme, read_table, read_tables, write_table

__all__ = [
    "ButcherTableau",
    "ConstructionError",
    "FRKC4Scheme",
    "IntegrationConfig",
    "IntegrationStats",
    "SchemeCoefficients",
    "SchemeTable",
    "SemiDiscreteSystem",
    "StabilityPolynomial",
    "build_frkc4",
    "build_scheme",
    "find_roots",
    "frkc2_step",
    "frkc4_step",
    "get_problem",
    "integrate",
    "maximize_alpha",
    "read_table",
    "read_tables",
    "solve_finishing",
    "write_table",
]
