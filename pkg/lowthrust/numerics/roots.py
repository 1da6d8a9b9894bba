from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import root

from lowthrust.errors import (
    LowThrustError,
    MaxIterations,
    NonFiniteResidual,
    SingularJacobian,
)

logger = logging.getLogger(__name__)

Residual = Callable[[np.ndarray], np.ndarray]

JAC_STEP = np.sqrt(np.finfo(float).eps)
MAX_CONDITION = 1.0 / np.finfo(float).eps
MIN_DAMPING = 1.0 / 1024.0
PENALTY = 1e10


@dataclass
class RootReport:
    solution: np.ndarray
    residual_norm: float
    iterations: int
    jacobian_evaluations: int
    converged: bool
    initial_residual: float = float("nan")
    history: list[float] = field(default_factory=list)


def _norm(values: np.ndarray) -> float:
    return float(np.max(np.abs(values))) if values.size else 0.0


def _safe_eval(F: Residual, x: np.ndarray) -> np.ndarray | None:
    """打靶中的轨道退化、积分失败等视为不可行点。"""
    try:
        values = np.asarray(F(x), dtype=float)
    except LowThrustError as exc:
        logger.debug("残差计算失败：%s", exc)
        return None
    if not np.all(np.isfinite(values)):
        return None
    return values


def fd_jacobian(F: Residual, x: np.ndarray, fx: np.ndarray, report: RootReport | None = None) -> np.ndarray:
    """前向差分雅可比矩阵，列步长 √ε·max(1, |x_i|)；前后两侧都不可行时抛出 NonFiniteResidual（附 report）。"""
    jac = np.empty((fx.size, x.size))
    for i in range(x.size):
        step = JAC_STEP * max(1.0, abs(x[i]))
        trial = x.copy()
        trial[i] += step
        values = _safe_eval(F, trial)
        if values is None:
            trial[i] = x[i] - step
            values = _safe_eval(F, trial)
            if values is None:
                raise NonFiniteResidual(f"第 {i} 列差分得到非有限残差", report)
            jac[:, i] = (fx - values) / step
        else:
            jac[:, i] = (values - fx) / step
    return jac


def _newton(F: Residual, x0: np.ndarray, tol: float, max_iter: int) -> RootReport:
    x = np.array(x0, dtype=float)
    fx = _safe_eval(F, x)
    if fx is None:
        raise NonFiniteResidual("初值处残差非有限", RootReport(x.copy(), np.inf, 0, 0, False, np.inf, [np.inf]))
    norm = _norm(fx)
    report = RootReport(x.copy(), norm, 0, 0, norm <= tol, norm, [norm])

    while norm > tol:
        if report.iterations >= max_iter:
            raise MaxIterations(f"{max_iter} 次迭代后残差仍为 {norm:.3e}", report)
        jac = fd_jacobian(F, x, fx, report)
        report.jacobian_evaluations += 1
        if not np.all(np.isfinite(jac)) or np.linalg.cond(jac) > MAX_CONDITION:
            raise SingularJacobian("雅可比矩阵奇异", report)
        step = np.linalg.solve(jac, -fx)

        merit = float(fx @ fx)
        damping = 1.0
        while True:
            trial = x + damping * step
            f_trial = _safe_eval(F, trial)
            if f_trial is not None and float(f_trial @ f_trial) < (1.0 - 1e-4 * damping) * merit:
                break
            damping *= 0.5
            if damping < MIN_DAMPING:
                if f_trial is None:
                    raise NonFiniteResidual("线搜索未找到有限残差", report)
                logger.warning(
                    "线搜索未能降低残差，接受阻尼 %.3g 的步长：‖F‖²由 %.3e 变为 %.3e",
                    2.0 * damping,
                    merit,
                    float(f_trial @ f_trial),
                )
                break

        x, fx = trial, f_trial
        norm = _norm(fx)
        report.iterations += 1
        report.history.append(norm)
        report.solution = x.copy()
        report.residual_norm = norm
        logger.debug("牛顿迭代 %d：‖F‖∞=%.3e，阻尼 %.3g", report.iterations, norm, damping)

    report.converged = True
    return report


def _hybrid(F: Residual, x0: np.ndarray, tol: float, max_iter: int) -> RootReport:
    evaluations: list[float] = []

    def wrapped(x: np.ndarray) -> np.ndarray:
        values = _safe_eval(F, x)
        if values is None:
            evaluations.append(np.inf)
            return np.full(x.size, PENALTY)
        evaluations.append(_norm(values))
        return values

    first = _safe_eval(F, np.asarray(x0, dtype=float))
    if first is None:
        raise NonFiniteResidual("初值处残差非有限", RootReport(np.array(x0, dtype=float), np.inf, 0, 0, False, np.inf, [np.inf]))
    initial = _norm(first)
    result = root(
        wrapped,
        np.asarray(x0, dtype=float),
        method="hybr",
        options={"xtol": 1e-14, "maxfev": max_iter * (len(x0) + 1)},
    )
    final = _safe_eval(F, result.x)
    norm = _norm(final) if final is not None else np.inf
    report = RootReport(
        solution=np.asarray(result.x, dtype=float),
        residual_norm=norm,
        iterations=len(evaluations),
        jacobian_evaluations=int(getattr(result, "njev", 0) or 0),
        converged=norm <= tol,
        initial_residual=initial,
        history=[initial, *evaluations],
    )
    if not report.converged:
        if final is None:
            raise NonFiniteResidual("hybr 结束于非有限残差", report)
        raise MaxIterations(f"hybr 未收敛：{result.message}（‖F‖∞={norm:.3e}）", report)
    return report


def solve_root(
    F: Residual,
    x0,
    tol: float = 1e-10,
    max_iter: int = 200,
    method: str = "newton",
) -> RootReport:
    """
    求解 F(x) = 0。

    Args:
        F: n -> n 残差函数
        x0: 初值
        tol: 收敛判据 ‖F‖∞ ≤ tol
        max_iter: 最大迭代次数
        method: "newton"（阻尼牛顿 + 回溯线搜索）或 "hybr"（scipy Powell 混合法）

    Returns:
        收敛的 RootReport；失败时抛出 NoConvergence 子类，report 附在异常上。
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if method == "hybr":
        return _hybrid(F, x0, tol, max_iter)
    return _newton(F, x0, tol, max_iter)
