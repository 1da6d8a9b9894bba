from .models import ControlInput, MeeState, PerturbationConfig, Propulsion, mee_position
from .perturbations import eclipse_factor, j2_accel, sun_direction
from .equations import (
    drift,
    dv_from_mass,
    gve_matrices,
    mass_from_dv,
    state_rate,
    thrust_scale,
)

__all__ = [
    "ControlInput",
    "MeeState",
    "PerturbationConfig",
    "Propulsion",
    "drift",
    "dv_from_mass",
    "eclipse_factor",
    "gve_matrices",
    "j2_accel",
    "mass_from_dv",
    "mee_position",
    "state_rate",
    "sun_direction",
    "thrust_scale",
]
