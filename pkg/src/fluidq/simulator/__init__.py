"""Monte Carlo validation of the fluid-queue formulas."""

from .estimators import Estimate, independence_checks
from .paths import (
    PathGrid,
    PeriodSet,
    extract_periods,
    local_time_path,
    palm_local_time_expectation,
    queue_path,
    reflect,
    right_cont_inverse,
    sample_path,
    simulate_path,
)
from .runner import SimulationConfig, SimulationResult, regime_for, simulate
