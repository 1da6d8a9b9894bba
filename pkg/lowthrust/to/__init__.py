from .solver import (
    ToSolution,
    beta_for_costates,
    bisect_tof,
    compute_beta_t,
    guess_tof,
    guess_tof_with_eo,
    shoot_free_time,
    solve_to,
    solve_to_with_perturbations,
    target_longitude_rate,
)

__all__ = [
    "ToSolution",
    "beta_for_costates",
    "bisect_tof",
    "compute_beta_t",
    "guess_tof",
    "guess_tof_with_eo",
    "shoot_free_time",
    "solve_to",
    "solve_to_with_perturbations",
    "target_longitude_rate",
]
