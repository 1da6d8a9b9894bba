from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from lowthrust.config import MissionConfig, SolverSettings
from lowthrust.control.laws import ControlLaw
from lowthrust.eo.solver import EoSolution, solve_eo, without_eclipses
from lowthrust.errors import LowThrustError, NoConvergence, ValidationError
from lowthrust.fo.solver import (
    ContinuationSchedule,
    ContinuationStep,
    compute_gamma_tr,
    continue_perturbations,
    shoot_fixed_time,
    solve_fo,
)
from lowthrust.numerics.propagation import Trajectory
from lowthrust.numerics.roots import RootReport
from lowthrust.to.solver import (
    beta_for_costates,
    guess_tof_with_eo,
    keplerian,
    shoot_free_time,
    solve_to,
    solve_to_with_perturbations,
)
from lowthrust.units.scaling import CanonicalMission, canonicalize

logger = logging.getLogger(__name__)

COMMANDS = ("solve-eo", "solve-fo", "solve-to")
SWEEP_PARAMS = ("gamma_tr", "beta_t")
TRAJECTORY_HEADER = (
    "t_days",
    "p",
    "f",
    "g",
    "h",
    "k",
    "L",
    "mass_kg",
    "throttle",
    "rho",
    "alpha_r",
    "alpha_t",
    "alpha_n",
    "nu",
)
CONTINUATION_HEADER = (
    "stage",
    "value",
    "lam_p",
    "lam_f",
    "lam_g",
    "lam_h",
    "lam_k",
    "lam_L",
    "iterations",
    "initial_residual",
    "final_residual",
    "fuel_kg",
    "tof_days",
)


@dataclass
class RunArtifacts:
    summary: dict[str, Any]
    trajectory: Trajectory
    continuation_log: list[ContinuationStep]
    mission: CanonicalMission
    paths: dict[str, Path] = field(default_factory=dict)

    def trajectory_rows(self) -> list[list[float]]:
        traj = self.trajectory
        units = self.mission.units
        return [
            [
                units.time_to_days(float(traj.t[i])),
                *(float(v) for v in traj.x[i]),
                units.mass_to_kg(float(traj.mass[i])),
                float(traj.throttle[i]),
                float(traj.rho[i]),
                *(float(v) for v in traj.direction[i]),
                float(traj.nu[i]),
            ]
            for i in range(len(traj))
        ]


@dataclass(frozen=True)
class SweepRow:
    value: float
    is_auto: bool
    initial_residual: float
    iterations: int
    converged: bool
    error: str = ""


@dataclass
class SweepTable:
    param: str
    auto_value: float
    rows: list[SweepRow]
    path: Path | None = None


def _summary(
    config: MissionConfig,
    command: str,
    mission: CanonicalMission,
    trajectory: Trajectory,
    lam0,
    report: RootReport | None,
    log: list[ContinuationStep],
    started: float,
    gamma_tr: float | None = None,
    beta_t: float | None = None,
) -> dict[str, Any]:
    dv = float(trajectory.dv[-1])
    return {
        "mission": config.name,
        "command": command,
        "fuel_kg": mission.fuel_kg(dv),
        "dv_m_s": mission.units.velocity_to_si(dv),
        "tof_days": mission.units.time_to_days(trajectory.t1),
        "gamma_tr": gamma_tr,
        "beta_t": beta_t,
        "lam0": [float(v) for v in lam0],
        "iterations": sum(step.iterations for step in log) if log else (report.iterations if report else 0),
        "final_residual": report.residual_norm if report else 0.0,
        "wall_time_s": time.perf_counter() - started,
    }


def run(
    command: str,
    config: MissionConfig,
    out_dir: Path | str | None = None,
    pin_gamma_tr: float | None = None,
    pin_beta_t: float | None = None,
) -> RunArtifacts:
    """
    执行 solve-eo / solve-fo / solve-to 并写出 summary.json、trajectory.csv、continuation.csv。

    未指定 out_dir 时写入 out/<任务名>-<命令>。

    solve-fo 在任务启用阴影时自动接上阴影延拓；solve-to 在启用 J2 或阴影时走摄动延拓流程。
    """
    if command not in COMMANDS:
        raise ValidationError("command", f"未知命令 {command!r}")
    config = canonicalize(config)
    mission = config.scaled
    settings = config.solver
    started = time.perf_counter()
    logger.info("开始 %s：%s", command, config.name)

    if command == "solve-eo":
        eo = solve_eo(config)
        log = [
            ContinuationStep(
                "eo",
                0.0,
                tuple(eo.lam0),
                eo.report.iterations,
                eo.report.initial_residual,
                eo.report.residual_norm,
                eo.fuel_mass,
                mission.units.time_to_days(eo.tof),
            )
        ]
        summary = _summary(config, command, mission, eo.trajectory, eo.lam0, eo.report, log, started)
        artifacts = RunArtifacts(summary, eo.trajectory, log, mission)
    elif command == "solve-fo":
        fo = solve_fo(config, pin_gamma_tr=pin_gamma_tr)
        if mission.pc.eclipse_enabled:
            fo = continue_perturbations(config, fo)
        summary = _summary(
            config, command, mission, fo.trajectory, fo.lam0, fo.report, fo.continuation_log, started, gamma_tr=fo.gamma_tr
        )
        artifacts = RunArtifacts(summary, fo.trajectory, fo.continuation_log, mission)
    else:
        if mission.pc.eclipse_enabled or mission.pc.j2_enabled:
            to = solve_to_with_perturbations(config, pin_beta_t=pin_beta_t)
        else:
            to = solve_to(config, pin_beta_t=pin_beta_t)
        summary = _summary(
            config, command, mission, to.trajectory, to.lam0, to.report, to.continuation_log, started, beta_t=to.beta_t
        )
        summary["transversality_residual"] = to.transversality_residual
        artifacts = RunArtifacts(summary, to.trajectory, to.continuation_log, mission)

    logger.info(
        "%s 完成：燃料 %.4f kg，Δv %.2f m/s，TOF %.4f 天",
        command,
        summary["fuel_kg"],
        summary["dv_m_s"],
        summary["tof_days"],
    )
    if out_dir is None:
        out_dir = default_out_dir(config.name, command)
    write_artifacts(artifacts, Path(out_dir))
    return artifacts


def default_out_dir(mission_name: str, command: str) -> Path:
    return Path("out") / f"{mission_name}-{command}"


def write_artifacts(artifacts: RunArtifacts, out_dir: Path) -> dict[str, Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "summary": out_dir / "summary.json",
        "trajectory": out_dir / "trajectory.csv",
        "continuation": out_dir / "continuation.csv",
    }
    paths["summary"].write_text(json.dumps(artifacts.summary, indent=2, ensure_ascii=False), encoding="utf-8")
    with paths["trajectory"].open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(TRAJECTORY_HEADER)
        writer.writerows(artifacts.trajectory_rows())
    with paths["continuation"].open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(CONTINUATION_HEADER)
        for step in artifacts.continuation_log:
            writer.writerow(
                [
                    step.stage,
                    step.value,
                    *step.lam0,
                    step.iterations,
                    step.initial_residual,
                    step.final_residual,
                    step.fuel_mass,
                    step.tof,
                ]
            )
    artifacts.paths = paths
    logger.info("结果已写入 %s", out_dir)
    return paths


def _row(value: float, is_auto: bool, attempt) -> SweepRow:
    try:
        report = attempt()
    except NoConvergence as exc:
        report = exc.report
        logger.warning("扫描点 %.6g 未收敛：%s", value, exc)
        return SweepRow(
            value,
            is_auto,
            report.initial_residual if report else float("nan"),
            report.iterations if report else 0,
            False,
            str(exc),
        )
    except LowThrustError as exc:
        logger.warning("扫描点 %.6g 失败：%s", value, exc)
        return SweepRow(value, is_auto, float("nan"), 0, False, str(exc))
    return SweepRow(value, is_auto, report.initial_residual, report.iterations, True)


def _expand_grid(grid: Sequence[float | str], auto_value: float) -> list[tuple[float, bool]]:
    points: list[tuple[float, bool]] = []
    for item in grid:
        if isinstance(item, str) and item.strip().lower() == "auto":
            points.append((auto_value, True))
        else:
            value = float(item)
            points.append((value, bool(np.isclose(value, auto_value, rtol=0.0, atol=1e-12))))
    return points


def sweep(
    param: str,
    config: MissionConfig,
    grid: Sequence[float | str],
    out_dir: Path | str | None = None,
    workers: int = 1,
    settings: SolverSettings | None = None,
) -> SweepTable:
    """
    固定 Γ_TR 或 β_t 重跑首个打靶步，记录初始残差与迭代次数。

    gamma_tr 扫描首个平滑燃料最优步（k 序列第一项），beta_t 扫描时间最优打靶；
    网格中的 "auto" 代表自动计算值，该行标记为 is_auto。单行失败只记录，不中断扫描。
    """
    if param not in SWEEP_PARAMS:
        raise ValidationError("param", f"只支持 {SWEEP_PARAMS}")
    if not grid:
        raise ValidationError("grid", "扫描网格不能为空")
    config = canonicalize(config)
    settings = settings or config.solver
    mission = config.scaled

    if param == "gamma_tr":
        pc = without_eclipses(mission.pc)
        eo: EoSolution = solve_eo(mission, settings=settings)
        auto_value = compute_gamma_tr(eo, mission.prop, settings.gamma_tr_tol)
        k_first = ContinuationSchedule.from_settings(settings).k_values[0]

        def attempt_for(value: float):
            law = ControlLaw.smoothed(value, k_first)
            return lambda: shoot_fixed_time(mission, law, pc, eo.lam0, settings)[0]

    else:
        kepler = replace(mission, pc=keplerian(mission.pc))
        tof, eo = guess_tof_with_eo(kepler, kepler.tof_upper, settings.tof_tol, settings)
        auto_value = beta_for_costates(kepler, eo.lam0, tof, kepler.pc, settings)

        def attempt_for(value: float):
            return lambda: shoot_free_time(kepler, value, kepler.pc, eo.lam0, tof, settings)

    points = _expand_grid(grid, auto_value)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        rows = list(pool.map(lambda point: _row(point[0], point[1], attempt_for(point[0])), points))

    table = SweepTable(param, auto_value, rows)
    logger.info("%s 扫描完成：%d 行，自动值 %.6f", param, len(rows), auto_value)
    if out_dir is not None:
        table.path = write_sweep(table, Path(out_dir))
    return table


def write_sweep(table: SweepTable, out_dir: Path) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"sweep_{table.param}.csv"
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(SweepRow.__dataclass_fields__))
        writer.writeheader()
        for row in table.rows:
            writer.writerow(asdict(row))
    return path
