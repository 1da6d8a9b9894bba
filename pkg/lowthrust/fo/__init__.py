from .solver import (
    ContinuationSchedule,
    ContinuationStep,
    FoSolution,
    compute_gamma_tr,
    continue_perturbations,
    solve_fo,
)
from .threshold import on_time, threshold_for_profile

__all__ = [
    "ContinuationSchedule",
    "ContinuationStep",
    "FoSolution",
    "compute_gamma_tr",
    "continue_perturbations",
    "on_time",
    "solve_fo",
    "threshold_for_profile",
]
