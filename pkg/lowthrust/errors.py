from typing import Any


class LowThrustError(RuntimeError):
    """lowthrust 所有异常的基类。"""


class NonPositiveSemiLatus(LowThrustError):
    pass


class DegenerateOrbit(LowThrustError):
    pass


class RetrogradeSingularity(LowThrustError):
    pass


class NegativeDeltaV(LowThrustError):
    pass


class EpochUnavailable(LowThrustError):
    pass


class ZeroPrimer(LowThrustError):
    pass


class StepSizeUnderflow(LowThrustError):
    pass


class SingularTransition(LowThrustError):
    pass


class NoConvergence(LowThrustError):
    """求根失败；report 属性保存 RootReport。"""

    def __init__(self, message: str, report: Any = None) -> None:
        super().__init__(message)
        self.report = report


class MaxIterations(NoConvergence):
    pass


class SingularJacobian(NoConvergence):
    pass


class NonFiniteResidual(NoConvergence):
    pass


class Unbracketable(LowThrustError):
    """二分法未能在容差内收敛；best 属性保存最优迭代值。"""

    def __init__(self, message: str, best: float | None = None) -> None:
        super().__init__(message)
        self.best = best


class ContinuationStalled(LowThrustError):
    def __init__(self, parameter: str, value: float, report: Any = None) -> None:
        super().__init__(f"延拓在 {parameter}={value:.6g} 处失败")
        self.parameter = parameter
        self.value = value
        self.report = report


class EoFailedAt(LowThrustError):
    def __init__(self, tof: float, report: Any = None) -> None:
        super().__init__(f"飞行时间 t={tof:.6g} 的能量最优问题未收敛")
        self.tof = tof
        self.report = report


class ParseError(LowThrustError):
    pass


class ValidationError(LowThrustError):
    def __init__(self, field: str, message: str) -> None:
        super().__init__(f"{field}: {message}")
        self.field = field
