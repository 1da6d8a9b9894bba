from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from lowthrust.config import MissionConfig, SolverSettings, resolve_problem
from lowthrust.control.laws import ControlLaw, Costates
from lowthrust.dynamics.models import PerturbationConfig, Propulsion
from lowthrust.eo.solver import EoSolution, fixed_time_residual, solve_eo, without_eclipses
from lowthrust.errors import ContinuationStalled, NoConvergence, Unbracketable, ValidationError
from lowthrust.fo.threshold import MAX_BISECTIONS, threshold_for_profile
from lowthrust.numerics.propagation import AugmentedState, Trajectory, integrate, propagate
from lowthrust.numerics.roots import RootReport, solve_root
from lowthrust.units.scaling import CanonicalMission

logger = logging.getLogger(__name__)

FO_REFINEMENTS = 3


@dataclass(frozen=True)
class ContinuationStep:
    stage: str
    value: float
    lam0: tuple[float, ...]
    iterations: int
    initial_residual: float
    final_residual: float
    fuel_mass: float
    tof: float


@dataclass(frozen=True)
class ContinuationSchedule:
    k_values: tuple[float, ...] = (0.0, 0.2475, 0.495, 0.7425, 0.99)
    eps_values: tuple[float, ...] = tuple(round(0.1 * i, 10) for i in range(1, 11))

    def __post_init__(self) -> None:
        for name, values, upper_open in (("k_values", self.k_values, True), ("eps_values", self.eps_values, False)):
            if not values:
                raise ValidationError(name, "延拓序列不能为空")
            if any(b <= a for a, b in zip(values, values[1:])):
                raise ValidationError(name, "延拓序列必须严格递增")
            if values[0] < 0.0 or (values[-1] >= 1.0 if upper_open else values[-1] > 1.0):
                raise ValidationError(name, "延拓参数越界")

    @property
    def k_max(self) -> float:
        return self.k_values[-1]

    def refinements(self, count: int = FO_REFINEMENTS) -> tuple[float, ...]:
        """k_max 与 1 之间的补充平滑步 1 − (1 − k_max)·10⁻ʲ，bang-bang 打靶失败时依次使用。"""
        gap = 1.0 - self.k_max
        return tuple(1.0 - gap * 10.0**-j for j in range(1, count + 1))

    @classmethod
    def build(cls, k_steps: int = 5, k_max: float = 0.99, deps: float = 0.1) -> "ContinuationSchedule":
        if k_steps < 1:
            raise ValidationError("k_steps", "至少需要一步")
        if not 0.0 < deps <= 1.0:
            raise ValidationError("deps", "Δε 必须位于 (0, 1]")
        k_values = tuple(float(k) for k in np.linspace(0.0, k_max, k_steps)) if k_steps > 1 else (0.0,)
        count = math.ceil(1.0 / deps - 1e-9)
        eps_values = tuple(min(1.0, round(deps * i, 12)) for i in range(1, count + 1))
        return cls(k_values, eps_values)

    @classmethod
    def from_settings(cls, settings: SolverSettings) -> "ContinuationSchedule":
        return cls.build(settings.k_steps, settings.k_max, settings.deps)


@dataclass(frozen=True)
class FoSolution:
    lam0: Costates
    gamma_tr: float
    trajectory: Trajectory
    dv: float
    fuel_mass: float
    report: RootReport | None
    continuation_log: list[ContinuationStep] = field(default_factory=list)
    eo: EoSolution | None = None


def compute_gamma_tr(eo: EoSolution, prop: Propulsion, tol: float = 1e-6) -> float:
    """由能量最优解构造 bang-bang 剖面，二分出 Δv 一致的 Γ_TR。"""
    times, gamma = eo.gamma_e_profile
    gamma_tr = threshold_for_profile(times, gamma, eo.dv, prop, tol, MAX_BISECTIONS)
    logger.info("Γ_TR=%.6f", gamma_tr)
    return gamma_tr


def _step_record(
    stage: str,
    value: float,
    report: RootReport,
    mission: CanonicalMission,
    dv: float,
) -> ContinuationStep:
    return ContinuationStep(
        stage=stage,
        value=float(value),
        lam0=tuple(float(v) for v in report.solution[:6]),
        iterations=report.iterations,
        initial_residual=report.initial_residual,
        final_residual=report.residual_norm,
        fuel_mass=mission.fuel_kg(dv),
        tof=mission.units.time_to_days(mission.tof),
    )


def shoot_fixed_time(
    mission: CanonicalMission,
    law: ControlLaw,
    pc: PerturbationConfig,
    guess,
    settings: SolverSettings,
) -> tuple[RootReport, float]:
    """固定时间打靶，返回求根报告与终端 Δv。"""
    report = solve_root(
        fixed_time_residual(mission, law, pc, settings.propagation_tol),
        np.asarray(guess, dtype=float),
        tol=settings.root_tol,
        max_iter=settings.max_iter,
        method=settings.root_method,
    )
    y0 = np.concatenate((mission.x0.as_array(), report.solution, [0.0]))
    y1 = integrate(y0, law, 0.0, mission.tof, mission.prop, pc, settings.propagation_tol)
    return report, float(y1[12])


def _finish(
    mission: CanonicalMission,
    law: ControlLaw,
    pc: PerturbationConfig,
    lam0: np.ndarray,
    settings: SolverSettings,
    report: RootReport | None,
    log: list[ContinuationStep],
    eo: EoSolution | None,
) -> FoSolution:
    costates = Costates.from_array(lam0)
    trajectory = propagate(
        AugmentedState(mission.x0, costates),
        law,
        0.0,
        mission.tof,
        mission.prop,
        pc,
        settings.propagation_tol,
        settings.samples,
    )
    dv = float(trajectory.dv[-1])
    return FoSolution(costates, law.gamma_tr, trajectory, dv, mission.fuel_kg(dv), report, log, eo)


def _smoothed_step(
    mission: CanonicalMission,
    gamma_tr: float,
    k: float,
    pc: PerturbationConfig,
    lam: np.ndarray,
    settings: SolverSettings,
    log: list[ContinuationStep],
) -> np.ndarray:
    law = ControlLaw.smoothed(gamma_tr, k)
    try:
        report, dv = shoot_fixed_time(mission, law, pc, lam, settings)
    except NoConvergence as exc:
        raise ContinuationStalled("k", k, exc.report) from exc
    log.append(_step_record("sfo", k, report, mission, dv))
    logger.info("平滑燃料最优 k=%.6f：迭代 %d 次，燃料 %.4f kg", k, report.iterations, mission.fuel_kg(dv))
    return report.solution


def solve_fo(
    problem: MissionConfig | CanonicalMission,
    schedule: ContinuationSchedule | None = None,
    settings: SolverSettings | None = None,
    pin_gamma_tr: float | None = None,
    eo: EoSolution | None = None,
) -> FoSolution:
    """
    燃料最优流程：能量最优 -> Γ_TR -> 平滑燃料最优 k 延拓 -> 精确 bang-bang 燃料最优。

    每一步以上一步的 λ0 作为初值；阴影不参与，由 continue_perturbations 加入。
    """
    mission, settings = resolve_problem(problem, settings)
    schedule = schedule or ContinuationSchedule.from_settings(settings)
    pc = without_eclipses(mission.pc)
    log: list[ContinuationStep] = []

    if eo is None:
        eo = solve_eo(mission, settings=settings)
    log.append(_step_record("eo", 0.0, eo.report, mission, eo.dv))

    if eo.dv <= settings.gamma_tr_tol:
        logger.info("能量最优 Δv≈0，按滑行解返回")
        law = ControlLaw.fuel(pin_gamma_tr if pin_gamma_tr is not None else 1.0)
        return _finish(mission, law, pc, np.zeros(6), settings, eo.report, log, eo)

    if pin_gamma_tr is not None:
        gamma_tr = float(pin_gamma_tr)
        logger.info("使用指定的 Γ_TR=%.6f", gamma_tr)
    else:
        try:
            gamma_tr = compute_gamma_tr(eo, mission.prop, settings.gamma_tr_tol)
        except Unbracketable as exc:
            logger.warning("Γ_TR 二分未达容差，使用最优值 %.6f：%s", exc.best, exc)
            gamma_tr = float(exc.best)

    lam = np.asarray(eo.lam0, dtype=float)
    for k in schedule.k_values:
        lam = _smoothed_step(mission, gamma_tr, k, pc, lam, settings, log)

    law = ControlLaw.fuel(gamma_tr)
    extra = list(schedule.refinements())
    while True:
        try:
            report, dv = shoot_fixed_time(mission, law, pc, lam, settings)
            break
        except NoConvergence as exc:
            if not extra:
                raise ContinuationStalled("k", 1.0, exc.report) from exc
            k = extra.pop(0)
            logger.warning("bang-bang 打靶未收敛（%s），补充平滑步 k=%.6f", exc, k)
            lam = _smoothed_step(mission, gamma_tr, k, pc, lam, settings, log)
    log.append(_step_record("fo", 1.0, report, mission, dv))
    logger.info("燃料最优收敛：迭代 %d 次，燃料 %.4f kg", report.iterations, mission.fuel_kg(dv))
    return _finish(mission, law, pc, report.solution, settings, report, log, eo)


def continue_perturbations(
    problem: MissionConfig | CanonicalMission,
    fo_j2: FoSolution,
    deps: float | None = None,
    settings: SolverSettings | None = None,
) -> FoSolution:
    """阴影 ε 延拓：ε = Δε, 2Δε, …, 1，推力乘以 (1 − εν)，每步以前一步 λ0 热启动。"""
    mission, settings = resolve_problem(problem, settings)
    schedule = ContinuationSchedule.build(1, 0.0, deps if deps is not None else settings.deps)
    law = ControlLaw.fuel(fo_j2.gamma_tr)
    base = replace(mission.pc, eclipse_enabled=True)
    log = list(fo_j2.continuation_log)

    lam = np.asarray(fo_j2.lam0, dtype=float)
    report = fo_j2.report
    pc = base
    for eps in schedule.eps_values:
        pc = replace(base, eclipse_scale=eps)
        try:
            report, dv = shoot_fixed_time(mission, law, pc, lam, settings)
        except NoConvergence as exc:
            raise ContinuationStalled("epsilon", eps, exc.report) from exc
        lam = report.solution
        log.append(_step_record("eclipse", eps, report, mission, dv))
        logger.info("阴影延拓 ε=%.3f：迭代 %d 次，燃料 %.4f kg", eps, report.iterations, mission.fuel_kg(dv))
    return _finish(mission, law, pc, lam, settings, report, log, fo_j2.eo)
