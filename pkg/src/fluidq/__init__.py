"""Fluid queues driven by the local time of a reflected one-sided Levy process."""

from .levy_model import (
    CompoundPoissonExp,
    InverseBMLocalTime,
    LevyModel,
    NoJumps,
    SpectralSign,
    StableSubordinator,
    classify,
    laplace_exponent,
    laplace_exponent_derivative,
    validate_assumptions,
)
from .transforms import phi_lambda, phi_Y, psi_lambda, queue_exponents

__version__ = "0.1.0"
