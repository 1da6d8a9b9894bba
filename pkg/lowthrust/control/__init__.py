from .laws import (
    ControlLaw,
    Costates,
    LawKind,
    costate_rate,
    costate_rate_fd,
    directions,
    evaluate,
    extremal_rates,
    hamiltonian,
    hamiltonian_gradient,
    optimal_direction,
    primer_vector,
    switching_function,
    throttle,
)

__all__ = [
    "ControlLaw",
    "Costates",
    "LawKind",
    "costate_rate",
    "costate_rate_fd",
    "directions",
    "evaluate",
    "extremal_rates",
    "hamiltonian",
    "hamiltonian_gradient",
    "optimal_direction",
    "primer_vector",
    "switching_function",
    "throttle",
]
