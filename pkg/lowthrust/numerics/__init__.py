from .propagation import (
    AugmentedState,
    augmented_rhs,
    Trajectory,
    TrajectorySample,
    full_throttle_dv,
    hamiltonian_history,
    integrate,
    propagate,
    sample_controls,
)
from .roots import RootReport, fd_jacobian, solve_root

__all__ = [
    "AugmentedState",
    "RootReport",
    "Trajectory",
    "TrajectorySample",
    "augmented_rhs",
    "fd_jacobian",
    "full_throttle_dv",
    "hamiltonian_history",
    "integrate",
    "propagate",
    "sample_controls",
    "solve_root",
]
