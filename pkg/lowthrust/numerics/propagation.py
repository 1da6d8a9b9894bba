from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import solve_ivp

from lowthrust.control.laws import (
    ControlLaw,
    Costates,
    directions,
    evaluate,
    extremal_rates,
    primer_vector,
    switching_function,
    throttle,
)
from lowthrust.dynamics.equations import gve_matrices, mass_from_dv
from lowthrust.dynamics.models import MeeState, PerturbationConfig, Propulsion
from lowthrust.dynamics.perturbations import eclipse_factor
from lowthrust.errors import DegenerateOrbit, StepSizeUnderflow, ValidationError

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-12
DEFAULT_SAMPLES = 400
METHOD = "DOP853"


@dataclass(frozen=True)
class AugmentedState:
    x: MeeState
    lam: Costates
    dv: float = 0.0

    @classmethod
    def from_vector(cls, y) -> "AugmentedState":
        y = np.asarray(y, dtype=float).reshape(13)
        return cls(MeeState.from_array(y[:6]), Costates.from_array(y[6:12]), float(y[12]))

    def as_vector(self) -> np.ndarray:
        return np.concatenate((self.x.as_array(), self.lam.as_array(), [self.dv]))


class TrajectorySample(NamedTuple):
    t: float
    state: AugmentedState
    throttle: float
    rho: float
    direction: np.ndarray
    nu: float
    mass: float


@dataclass(frozen=True)
class Trajectory:
    """
    采样后的轨迹。

    所有数组按时间排列，第 0 维为采样点；direction 为 RTN 推力方向（零主矢量处为 0）。
    """

    t: np.ndarray
    x: np.ndarray
    lam: np.ndarray
    dv: np.ndarray
    throttle: np.ndarray
    rho: np.ndarray
    direction: np.ndarray
    nu: np.ndarray
    mass: np.ndarray

    @property
    def t0(self) -> float:
        return float(self.t[0])

    @property
    def t1(self) -> float:
        return float(self.t[-1])

    @property
    def final(self) -> AugmentedState:
        return AugmentedState(
            MeeState.from_array(self.x[-1]), Costates.from_array(self.lam[-1]), float(self.dv[-1])
        )

    @property
    def samples(self) -> list[TrajectorySample]:
        return [
            TrajectorySample(
                float(self.t[i]),
                AugmentedState(MeeState.from_array(self.x[i]), Costates.from_array(self.lam[i]), float(self.dv[i])),
                float(self.throttle[i]),
                float(self.rho[i]),
                self.direction[i],
                float(self.nu[i]),
                float(self.mass[i]),
            )
            for i in range(len(self.t))
        ]

    def __len__(self) -> int:
        return len(self.t)


def _mass_of(dv: float, prop: Propulsion) -> float:
    return mass_from_dv(max(dv, 0.0), prop)


def augmented_rhs(law: ControlLaw, prop: Propulsion, pc: PerturbationConfig):
    """
    增广系统右端 ẏ(t, y)。

    试探级落在退化轨道（p ≤ 0、w ≤ 0）或质量耗尽处时返回 NaN，积分器据此拒绝该步。
    """

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        try:
            m = _mass_of(y[12], prop)
            x_dot, lam_dot, dv_rate = extremal_rates(y[:6], y[6:12], m, law, prop, pc, t)
        except (DegenerateOrbit, ZeroDivisionError, OverflowError):
            return np.full(13, np.nan)
        return np.concatenate((x_dot, lam_dot, [dv_rate]))

    return rhs


def _check_span(t0: float, t1: float, tol: float) -> None:
    if not t1 > t0:
        raise ValidationError("t1", f"终端时刻 {t1} 必须大于初始时刻 {t0}")
    if not tol > 0:
        raise ValidationError("tol", "积分容差必须为正")


def _solve(y0, law, t0, t1, prop, pc, tol, dense: bool):
    y0 = np.asarray(y0, dtype=float)
    # 初始状态本身非法时直接抛出，不交给步长控制
    extremal_rates(y0[:6], y0[6:12], _mass_of(y0[12], prop), law, prop, pc, t0)
    result = solve_ivp(
        augmented_rhs(law, prop, pc),
        (t0, t1),
        y0,
        method=METHOD,
        rtol=tol,
        atol=tol,
        dense_output=dense,
    )
    if result.status == -1:
        raise StepSizeUnderflow(f"积分在 t={result.t[-1]:.6g} 处失败：{result.message}")
    return result


def integrate(
    y0,
    law: ControlLaw,
    t0: float,
    t1: float,
    prop: Propulsion,
    pc: PerturbationConfig,
    tol: float = DEFAULT_TOL,
) -> np.ndarray:
    """只返回终端增广状态（长度 13），打靶迭代使用。"""
    _check_span(t0, t1, tol)
    return _solve(y0, law, t0, t1, prop, pc, tol, dense=False).y[:, -1]


def sample_controls(
    t: np.ndarray,
    y: np.ndarray,
    law: ControlLaw,
    prop: Propulsion,
    pc: PerturbationConfig,
) -> dict[str, np.ndarray]:
    """在给定采样点上计算 Γ、ρ、α̂、ν 与质量。y 形状 (n, 13)。"""
    x = y[:, :6]
    lam = y[:, 6:12]
    mass = np.array([_mass_of(dv, prop) for dv in y[:, 12]])
    _, B = gve_matrices(x, pc.mu)
    primer = primer_vector(B, lam)
    if pc.eclipse_enabled:
        nu = np.array([eclipse_factor(x[i], t[i], pc) for i in range(len(t))])
    else:
        nu = np.zeros(len(t))
    return {
        "throttle": np.asarray(throttle(law, primer, mass, prop.m0), dtype=float),
        "rho": np.asarray(switching_function(primer, law.gamma_tr), dtype=float),
        "direction": directions(primer),
        "nu": nu,
        "mass": mass,
    }


def propagate(
    y0: AugmentedState,
    law: ControlLaw,
    t0: float,
    t1: float,
    prop: Propulsion,
    pc: PerturbationConfig,
    tol: float = DEFAULT_TOL,
    samples: int = DEFAULT_SAMPLES,
) -> Trajectory:
    """
    积分 ẋ = ∂H/∂λ、λ̇ = −∂H/∂x 与 Δv 累积量，返回稠密采样轨迹。

    采样点为 samples 个等距时刻与所有接受步的并集。
    """
    _check_span(t0, t1, tol)
    vector = y0.as_vector() if isinstance(y0, AugmentedState) else np.asarray(y0, dtype=float)
    result = _solve(vector, law, t0, t1, prop, pc, tol, dense=True)

    t = np.union1d(np.linspace(t0, t1, max(samples, 2)), result.t)
    y = result.sol(t).T
    y[0] = vector
    y[-1] = result.y[:, -1]
    # Δv 不减，稠密插值的微小回摆截掉
    y[:, 12] = np.maximum.accumulate(np.maximum(y[:, 12], 0.0))

    controls = sample_controls(t, y, law, prop, pc)
    logger.debug("积分完成：%d 个接受步，%d 个采样点", len(result.t), len(t))
    return Trajectory(
        t=t,
        x=y[:, :6],
        lam=y[:, 6:12],
        dv=y[:, 12],
        **controls,
    )


def hamiltonian_history(
    trajectory: Trajectory,
    law: ControlLaw,
    prop: Propulsion,
    pc: PerturbationConfig,
) -> np.ndarray:
    """沿轨迹逐点计算哈密顿函数。"""
    if not pc.eclipse_enabled:
        return np.asarray(
            evaluate(trajectory.x, trajectory.lam, trajectory.mass, law, prop, pc).hamiltonian,
            dtype=float,
        )
    return np.array(
        [
            float(evaluate(trajectory.x[i], trajectory.lam[i], trajectory.mass[i], law, prop, pc, trajectory.t[i]).hamiltonian)
            for i in range(len(trajectory))
        ]
    )


def full_throttle_dv(duration: float, prop: Propulsion) -> float:
    """满推力持续 duration 的 Δv：c·ln(m0 / (m0 − T·t/c))，Isp 无穷时为 a·t。"""
    if math.isinf(prop.isp_g0):
        return prop.accel * duration
    burned = prop.t_max * duration / prop.isp_g0
    if burned >= prop.m0:
        return math.inf
    return prop.isp_g0 * math.log(prop.m0 / (prop.m0 - burned))
