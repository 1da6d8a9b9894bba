from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from lowthrust.config import MissionConfig, SolverSettings, resolve_problem
from lowthrust.control.laws import ControlLaw, Costates, evaluate
from lowthrust.dynamics.equations import gve_matrices, mass_from_dv
from lowthrust.dynamics.models import PerturbationConfig, Propulsion
from lowthrust.eo.solver import EoSolution, solve_eo
from lowthrust.errors import (
    ContinuationStalled,
    DegenerateOrbit,
    EoFailedAt,
    LowThrustError,
    NoConvergence,
    Unbracketable,
    ValidationError,
)
from lowthrust.fo.solver import ContinuationSchedule, ContinuationStep
from lowthrust.numerics.propagation import AugmentedState, Trajectory, full_throttle_dv, integrate, propagate
from lowthrust.numerics.roots import RootReport, solve_root
from lowthrust.units.scaling import CanonicalMission

logger = logging.getLogger(__name__)

MAX_BISECTIONS = 60


@dataclass(frozen=True)
class ToSolution:
    lam0: Costates
    tof: float
    tof_days: float
    beta_t: float
    trajectory: Trajectory
    dv: float
    fuel_mass: float
    transversality_residual: float
    report: RootReport
    continuation_log: list[ContinuationStep] = field(default_factory=list)
    eo: EoSolution | None = None


def keplerian(pc: PerturbationConfig) -> PerturbationConfig:
    return replace(pc, j2_enabled=False, eclipse_enabled=False)


def target_longitude_rate(mission: CanonicalMission) -> float:
    """目标轨道在 x1 处的开普勒真经度变化率 L̇_t = √(μp)(w/p)²。"""
    A, _ = gve_matrices(mission.x1.as_array(), mission.pc.mu)
    rate = float(A[5])
    if not rate > 0.0:
        raise DegenerateOrbit(f"目标真经度变化率 L̇_t={rate} 必须为正")
    return rate


def bisect_tof(
    dv_eo: Callable[[float], float],
    prop: Propulsion,
    t_upper: float,
    tol: float = 1e-6,
    max_iter: int = MAX_BISECTIONS,
) -> float:
    """
    在 [0, t_upper] 上二分飞行时间，使满推力 Δv_t 与能量最优 Δv_e 相等。

    Δv_t > Δv_e 说明时间偏长，上界收缩到 t。
    """
    if not t_upper > 0.0:
        raise ValidationError("t_upper", "飞行时间上界必须为正")
    lo, hi = 0.0, float(t_upper)
    best, best_err = hi, np.inf
    for iteration in range(max_iter):
        t = 0.5 * (lo + hi)
        dv_e = dv_eo(t)
        dv_t = full_throttle_dv(t, prop)
        err = abs(dv_t - dv_e)
        if err < best_err:
            best, best_err = t, err
        logger.debug("TOF 二分 %d：t=%.8f，Δv_t−Δv_e=%.3e", iteration, t, dv_t - dv_e)
        if err <= tol:
            return t
        if dv_t > dv_e:
            hi = t
        else:
            lo = t
    raise Unbracketable(f"{max_iter} 次二分后 |Δv_t−Δv_e|={best_err:.3e}", best=best)


def guess_tof_with_eo(
    mission: CanonicalMission,
    t_upper: float,
    tol: float,
    settings: SolverSettings,
) -> tuple[float, EoSolution]:
    """与 guess_tof 相同，同时返回该飞行时间下的能量最优解。"""
    solved: dict[float, EoSolution] = {}

    def dv_eo(t: float) -> float:
        candidate = mission.with_tof(t)
        # 以飞行时间最接近的已解能量最优问题热启动
        guesses: list[Costates | None] = [solved[min(solved, key=lambda s: abs(s - t))].lam0] if solved else []
        guesses.append(None)
        failure: LowThrustError | None = None
        for guess in guesses:
            try:
                eo = solve_eo(candidate, guess, settings)
            except LowThrustError as exc:
                failure = exc
                logger.warning("t=%.6g 的能量最优求解失败（初值=%s）：%s", t, "热启动" if guess is not None else "线性化", exc)
                continue
            solved[t] = eo
            return eo.dv
        raise EoFailedAt(t, getattr(failure, "report", None)) from failure

    tof = bisect_tof(dv_eo, mission.prop, t_upper, tol)
    logger.info("TOF 初值：%.4f 天", mission.units.time_to_days(tof))
    return tof, solved[tof]


def guess_tof(
    problem: MissionConfig | CanonicalMission,
    t_upper: float | None = None,
    tol: float | None = None,
    settings: SolverSettings | None = None,
) -> float:
    """以能量最优 Δv 与满推力 Δv 相等为条件二分飞行时间初值（标准单位）。"""
    mission, settings = resolve_problem(problem, settings)
    mission = replace(mission, pc=keplerian(mission.pc))
    upper = t_upper if t_upper is not None else mission.tof_upper
    return guess_tof_with_eo(mission, upper, tol if tol is not None else settings.tof_tol, settings)[0]


def beta_for_costates(
    mission: CanonicalMission,
    lam0,
    tof: float,
    pc: PerturbationConfig,
    settings: SolverSettings,
) -> float:
    """满推力积分到 tof，使横截条件 H(t1) − L̇_t·λ_L(t1) = 0 恰好成立的 β_t。"""
    y0 = np.concatenate((mission.x0.as_array(), np.asarray(lam0, dtype=float), [0.0]))
    law = ControlLaw.time(0.0)
    y1 = integrate(y0, law, 0.0, tof, mission.prop, pc, settings.propagation_tol)
    m1 = mass_from_dv(max(float(y1[12]), 0.0), mission.prop)
    h_without_beta = float(evaluate(y1[:6], y1[6:12], m1, law, mission.prop, pc, tof).hamiltonian)
    return target_longitude_rate(mission) * float(y1[11]) - h_without_beta


def compute_beta_t(
    eo_at_t: EoSolution,
    problem: MissionConfig | CanonicalMission,
    settings: SolverSettings | None = None,
) -> float:
    mission, settings = resolve_problem(problem, settings)
    beta = beta_for_costates(mission, eo_at_t.lam0, eo_at_t.tof, keplerian(mission.pc), settings)
    logger.info("β_t=%.6f", beta)
    return beta


def free_time_residual(mission: CanonicalMission, law: ControlLaw, pc: PerturbationConfig, tol: float):
    """自由终端时刻打靶函数：未知量 [λ0, t1]，残差 [x(t1) − x1, H(t1) − L̇_t·λ_L(t1)]。"""
    x0 = mission.x0.as_array()
    x1 = mission.x1.as_array()
    rate = target_longitude_rate(mission)

    def residual(z: np.ndarray) -> np.ndarray:
        t1 = float(z[6])
        if not t1 > 0.0:
            raise ValidationError("t1", "飞行时间必须为正")
        y1 = integrate(np.concatenate((x0, z[:6], [0.0])), law, 0.0, t1, mission.prop, pc, tol)
        m1 = mass_from_dv(max(float(y1[12]), 0.0), mission.prop)
        H = float(evaluate(y1[:6], y1[6:12], m1, law, mission.prop, pc, t1).hamiltonian)
        return np.concatenate((y1[:6] - x1, [H - rate * y1[11]]))

    return residual


def shoot_free_time(
    mission: CanonicalMission,
    beta_t: float,
    pc: PerturbationConfig,
    lam0,
    tof: float,
    settings: SolverSettings,
) -> RootReport:
    """以 (λ0, t1) 为未知量的时间最优打靶。"""
    law = ControlLaw.time(beta_t)
    return solve_root(
        free_time_residual(mission, law, pc, settings.propagation_tol),
        np.concatenate((np.asarray(lam0, dtype=float), [tof])),
        tol=settings.root_tol,
        max_iter=settings.max_iter,
        method=settings.root_method,
    )


def _record(stage: str, value: float, report: RootReport, mission: CanonicalMission, pc, beta_t, settings) -> ContinuationStep:
    z = report.solution
    y0 = np.concatenate((mission.x0.as_array(), z[:6], [0.0]))
    y1 = integrate(y0, ControlLaw.time(beta_t), 0.0, float(z[6]), mission.prop, pc, settings.propagation_tol)
    return ContinuationStep(
        stage=stage,
        value=float(value),
        lam0=tuple(float(v) for v in z[:6]),
        iterations=report.iterations,
        initial_residual=report.initial_residual,
        final_residual=report.residual_norm,
        fuel_mass=mission.fuel_kg(float(y1[12])),
        tof=mission.units.time_to_days(float(z[6])),
    )


def _finish(mission, beta_t, pc, report, settings, log, eo) -> ToSolution:
    z = report.solution
    tof = float(z[6])
    law = ControlLaw.time(beta_t)
    costates = Costates.from_array(z[:6])
    trajectory = propagate(
        AugmentedState(mission.x0, costates),
        law,
        0.0,
        tof,
        mission.prop,
        pc,
        settings.propagation_tol,
        settings.samples,
    )
    dv = float(trajectory.dv[-1])
    transversality = free_time_residual(mission, law, pc, settings.propagation_tol)(z)[6]
    return ToSolution(
        lam0=costates,
        tof=tof,
        tof_days=mission.units.time_to_days(tof),
        beta_t=beta_t,
        trajectory=trajectory,
        dv=dv,
        fuel_mass=mission.fuel_kg(dv),
        transversality_residual=float(transversality),
        report=report,
        continuation_log=log,
        eo=eo,
    )


def solve_to(
    problem: MissionConfig | CanonicalMission,
    settings: SolverSettings | None = None,
    pin_beta_t: float | None = None,
) -> ToSolution:
    """
    开普勒时间最优流程：TOF 初值二分 -> β_t -> 以 (λ0, t1) 为未知量打靶。

    摄动（阴影、J2）由 solve_to_with_perturbations 逐步加入。
    """
    mission, settings = resolve_problem(problem, settings)
    pc = keplerian(mission.pc)
    mission = replace(mission, pc=pc)

    tof_guess, eo = guess_tof_with_eo(mission, mission.tof_upper, settings.tof_tol, settings)
    log: list[ContinuationStep] = [
        ContinuationStep(
            "eo",
            0.0,
            tuple(eo.lam0),
            eo.report.iterations,
            eo.report.initial_residual,
            eo.report.residual_norm,
            eo.fuel_mass,
            mission.units.time_to_days(tof_guess),
        )
    ]
    if pin_beta_t is not None:
        beta_t = float(pin_beta_t)
        logger.info("使用指定的 β_t=%.6f", beta_t)
    else:
        beta_t = compute_beta_t(eo, mission, settings)

    report = shoot_free_time(mission, beta_t, pc, eo.lam0, tof_guess, settings)
    log.append(_record("to", 0.0, report, mission, pc, beta_t, settings))
    logger.info(
        "时间最优收敛：迭代 %d 次，TOF %.4f 天",
        report.iterations,
        mission.units.time_to_days(float(report.solution[6])),
    )
    return _finish(mission, beta_t, pc, report, settings, log, eo)


def solve_to_with_perturbations(
    problem: MissionConfig | CanonicalMission,
    settings: SolverSettings | None = None,
    pin_beta_t: float | None = None,
    deps: float | None = None,
) -> ToSolution:
    """
    先解开普勒时间最优问题，再按 ε 延拓加入阴影，最后加入 J2。

    每一步都用当前协态与 TOF 重新计算 β_t（pin_beta_t 指定时保持不变）。
    """
    mission, settings = resolve_problem(problem, settings)
    solution = solve_to(mission, settings, pin_beta_t)
    full = mission.pc
    if not (full.eclipse_enabled or full.j2_enabled):
        return solution

    log = list(solution.continuation_log)
    lam = np.asarray(solution.lam0, dtype=float)
    tof = solution.tof
    pc = keplerian(full)
    beta_t = solution.beta_t
    report = solution.report

    stages: list[tuple[str, float, PerturbationConfig]] = []
    if full.eclipse_enabled:
        schedule = ContinuationSchedule.build(1, 0.0, deps if deps is not None else settings.deps)
        stages += [("eclipse", eps, replace(pc, eclipse_enabled=True, eclipse_scale=eps)) for eps in schedule.eps_values]
    if full.j2_enabled:
        last = stages[-1][2] if stages else pc
        stages.append(("j2", 1.0, replace(last, j2_enabled=True)))

    for stage, value, pc in stages:
        if pin_beta_t is None:
            beta_t = beta_for_costates(mission, lam, tof, pc, settings)
        try:
            report = shoot_free_time(mission, beta_t, pc, lam, tof, settings)
        except NoConvergence as exc:
            raise ContinuationStalled("epsilon" if stage == "eclipse" else stage, value, exc.report) from exc
        lam, tof = report.solution[:6], float(report.solution[6])
        log.append(_record(stage, value, report, mission, pc, beta_t, settings))
        logger.info(
            "时间最优 %s=%.3f：β_t=%.4f，迭代 %d 次，TOF %.4f 天",
            stage,
            value,
            beta_t,
            report.iterations,
            mission.units.time_to_days(tof),
        )
    return _finish(replace(mission, pc=pc), beta_t, pc, report, settings, log, solution.eo)
