from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import solve_ivp

from lowthrust.config import MissionConfig, SolverSettings, resolve_problem
from lowthrust.control.laws import ControlLaw, Costates, fd_steps
from lowthrust.dynamics.equations import drift, gve_matrices
from lowthrust.dynamics.models import PerturbationConfig
from lowthrust.errors import SingularTransition, StepSizeUnderflow
from lowthrust.numerics.propagation import AugmentedState, Trajectory, integrate, propagate
from lowthrust.numerics.roots import RootReport, solve_root
from lowthrust.units.scaling import CanonicalMission

logger = logging.getLogger(__name__)

MAX_TRANSITION_CONDITION = 1e12
LINEAR_GUESS_TOL = 1e-10


@dataclass(frozen=True)
class EoSolution:
    lam0: Costates
    trajectory: Trajectory
    dv: float
    fuel_mass: float
    tof: float
    report: RootReport

    @property
    def gamma_e_profile(self) -> tuple[np.ndarray, np.ndarray]:
        """采样的 (t, Γ_e(t))。"""
        return self.trajectory.t, self.trajectory.throttle


def without_eclipses(pc: PerturbationConfig) -> PerturbationConfig:
    """关闭阴影，保留其余摄动（能量最优与 Kep.+J2 阶段使用）。"""
    return replace(pc, eclipse_enabled=False) if pc.eclipse_enabled else pc


def _drift_jacobian(x: np.ndarray, t: float, pc: PerturbationConfig) -> np.ndarray:
    steps = fd_steps(x)
    offsets = np.diag(steps)
    plus = drift(x + offsets, t, pc)
    minus = drift(x - offsets, t, pc)
    return ((plus - minus) / (2.0 * steps[:, None])).T


def linear_eo_guess(
    problem: MissionConfig | CanonicalMission,
    settings: SolverSettings | None = None,
) -> Costates:
    """
    线性化能量最优问题的初始协态解析解。

    以 x0 出发的无控滑行轨道为参考，沿参考轨道同时积分
    Ẋ = C·X − a·B·Bᵀ·Λ、Λ̇ = −Cᵀ·Λ（X(0) = 0，Λ(0) = I），
    再由 X(t1)·λ0 = x1 − x_ref(t1) 解出 λ0。
    """
    mission, _ = resolve_problem(problem, settings)
    pc = without_eclipses(mission.pc)
    accel = mission.prop.accel
    x0 = mission.x0.as_array()
    x1 = mission.x1.as_array()

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        x = y[:6]
        X = y[6:42].reshape(6, 6)
        Lam = y[42:].reshape(6, 6)
        C = _drift_jacobian(x, t, pc)
        _, B = gve_matrices(x, pc.mu)
        X_dot = C @ X - accel * (B @ B.T) @ Lam
        Lam_dot = -C.T @ Lam
        return np.concatenate((drift(x, t, pc), X_dot.ravel(), Lam_dot.ravel()))

    y0 = np.concatenate((x0, np.zeros(36), np.eye(6).ravel()))
    result = solve_ivp(
        rhs, (0.0, mission.tof), y0, method="DOP853", rtol=LINEAR_GUESS_TOL, atol=LINEAR_GUESS_TOL
    )
    if result.status == -1:
        raise StepSizeUnderflow(f"线性化参考轨道积分失败：{result.message}")

    end = result.y[:, -1]
    transition = end[6:42].reshape(6, 6)
    condition = np.linalg.cond(transition)
    if not np.isfinite(condition) or condition > MAX_TRANSITION_CONDITION:
        raise SingularTransition(f"线性化转移矩阵病态（条件数 {condition:.3e}）")

    lam0 = np.linalg.solve(transition, x1 - end[:6])
    logger.info("线性化初值：λ0=%s", np.array2string(lam0, precision=4))
    return Costates.from_array(lam0)


def fixed_time_residual(mission: CanonicalMission, law: ControlLaw, pc: PerturbationConfig, tol: float):
    """固定终端时刻的打靶函数 Φ(λ0) = x(t1) − x1。"""
    x0 = mission.x0.as_array()
    x1 = mission.x1.as_array()

    def residual(lam0: np.ndarray) -> np.ndarray:
        y0 = np.concatenate((x0, lam0, [0.0]))
        return integrate(y0, law, 0.0, mission.tof, mission.prop, pc, tol)[:6] - x1

    return residual


def solve_eo(
    problem: MissionConfig | CanonicalMission,
    guess: Costates | None = None,
    settings: SolverSettings | None = None,
) -> EoSolution:
    """打靶求解能量最优问题 Φ(λ0) = x(t1) − x1 = 0。guess 为空时使用线性化初值。"""
    mission, settings = resolve_problem(problem, settings)
    pc = without_eclipses(mission.pc)
    if guess is None:
        guess = linear_eo_guess(mission, settings)

    report = solve_root(
        fixed_time_residual(mission, ControlLaw.energy(), pc, settings.propagation_tol),
        np.asarray(guess, dtype=float),
        tol=settings.root_tol,
        max_iter=settings.max_iter,
        method=settings.root_method,
    )
    lam0 = Costates.from_array(report.solution)
    trajectory = propagate(
        AugmentedState(mission.x0, lam0),
        ControlLaw.energy(),
        0.0,
        mission.tof,
        mission.prop,
        pc,
        settings.propagation_tol,
        settings.samples,
    )
    dv = float(trajectory.dv[-1])
    fuel = mission.fuel_kg(dv)
    logger.info(
        "能量最优收敛：迭代 %d 次，残差 %.3e，燃料 %.4f kg",
        report.iterations,
        report.residual_norm,
        fuel,
    )
    return EoSolution(lam0, trajectory, dv, fuel, mission.tof, report)
