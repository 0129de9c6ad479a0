"""First-order reductions of Ermakov-Pinney equations and the Kasner
amplitude/phase construction for the scalar wave equation, with numerical
residual checks for every closed form."""

from .numerics import (
    Interval,
    IntegratorConfig,
    ResidualReport,
    ScalarFunction,
    Trajectory,
    derivative,
    find_zeros,
    integrate_ode,
    quadrature,
)
from .parametrix import ParametrixParams, verify_recipe

__version__ = "0.1.0"

__all__ = [
    "Interval",
    "IntegratorConfig",
    "ResidualReport",
    "ScalarFunction",
    "Trajectory",
    "derivative",
    "find_zeros",
    "integrate_ode",
    "quadrature",
    "ParametrixParams",
    "verify_recipe",
]
