from .solver import EoSolution, linear_eo_guess, solve_eo

__all__ = ["EoSolution", "linear_eo_guess", "solve_eo"]
