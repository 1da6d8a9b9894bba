from .conversions import CartesianState, cartesian_to_mee, mee_to_cartesian
from .scaling import CanonicalMission, UnitSystem, canonicalize

__all__ = [
    "CanonicalMission",
    "CartesianState",
    "UnitSystem",
    "canonicalize",
    "cartesian_to_mee",
    "mee_to_cartesian",
]
