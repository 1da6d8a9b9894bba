import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from lowthrust import __version__
from lowthrust.cli import COMMANDS, run, sweep
from lowthrust.config import MissionConfig, load_mission
from lowthrust.errors import ContinuationStalled, LowThrustError, ParseError, ValidationError

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lowthrust", description="小推力间接法轨道优化")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("mission", help="任务 JSON 路径，或内置名称 tempel1 / dionysus / gtoc9")
    common.add_argument("--out", type=Path, default=None, help="结果输出目录（默认 out/<任务>-<命令>）")
    common.add_argument("--tol", type=float, default=None, help="打靶收敛容差（标准单位）")
    common.add_argument("--samples", type=int, default=None, help="轨迹等距采样点数")
    common.add_argument("--k-steps", type=int, default=None, help="平滑参数 k 的延拓步数")
    common.add_argument("--deps", type=float, default=None, help="阴影延拓步长 Δε")
    common.add_argument(
        "--log-level",
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="日志级别",
    )

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve-eo", parents=[common], help="能量最优")
    fo = sub.add_parser("solve-fo", parents=[common], help="燃料最优（含平滑延拓）")
    fo.add_argument("--pin-gamma-tr", type=float, default=None, help="固定 Γ_TR，不做二分")
    to = sub.add_parser("solve-to", parents=[common], help="时间最优")
    to.add_argument("--pin-beta-t", type=float, default=None, help="固定 β_t，不按横截条件计算")
    sw = sub.add_parser("sweep", parents=[common], help="Γ_TR / β_t 扫描")
    sw.add_argument("--param", required=True, choices=["gamma_tr", "beta_t"])
    sw.add_argument("--grid", required=True, help="逗号分隔的取值，可包含 auto")
    sw.add_argument("--workers", type=int, default=1, help="并行线程数")
    return parser


def parse_grid(text: str) -> list[float | str]:
    items: list[float | str] = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        if token.lower() == "auto":
            items.append("auto")
            continue
        try:
            items.append(float(token))
        except ValueError as exc:
            raise ValidationError("grid", f"无法解析取值 {token!r}") from exc
    if not items:
        raise ValidationError("grid", "扫描网格不能为空")
    return items


class LowThrustApp:
    def __init__(self, argv: Sequence[str] | None = None) -> None:
        self._args = build_parser().parse_args(argv)
        self._logger = self._setup_logging(self._args.log_level)

    def run(self) -> int:
        args = self._args
        try:
            config = self._apply_overrides(load_mission(args.mission))
            if args.command == "sweep":
                table = sweep(args.param, config, parse_grid(args.grid), args.out, args.workers)
                for row in table.rows:
                    mark = "*" if row.is_auto else " "
                    print(f"{mark} {row.value:.6g}\t{row.initial_residual:.3e}\t{row.iterations}\t{row.converged}")
                return EXIT_OK
            artifacts = run(
                args.command,
                config,
                args.out,
                pin_gamma_tr=getattr(args, "pin_gamma_tr", None),
                pin_beta_t=getattr(args, "pin_beta_t", None),
            )
        except (ValidationError, ParseError) as exc:
            self._logger.error("配置错误：%s", exc)
            return EXIT_CONFIG
        except ContinuationStalled as exc:
            self._logger.error("延拓失败（%s=%.6g）：%s", exc.parameter, exc.value, exc)
            return EXIT_FAILURE
        except LowThrustError as exc:
            self._logger.error("求解失败：%s", exc)
            return EXIT_FAILURE
        except Exception:
            self._logger.exception("未预期的异常")
            return EXIT_FAILURE

        summary = artifacts.summary
        print(
            f"{summary['mission']} {summary['command']}: 燃料 {summary['fuel_kg']:.4f} kg, "
            f"Δv {summary['dv_m_s']:.2f} m/s, TOF {summary['tof_days']:.4f} 天"
        )
        return EXIT_OK

    def _apply_overrides(self, config: MissionConfig) -> MissionConfig:
        args = self._args
        changes = {}
        if args.tol is not None:
            changes["root_tol"] = args.tol
        if args.samples is not None:
            changes["samples"] = args.samples
        if args.k_steps is not None:
            changes["k_steps"] = args.k_steps
        if args.deps is not None:
            changes["deps"] = args.deps
        for name, value in changes.items():
            if not value > 0:
                raise ValidationError(name, "必须为正")
        if not changes:
            return config
        self._logger.info("命令行覆盖求解器设置：%s", changes)
        return replace(config, solver=replace(config.solver, **changes))

    @staticmethod
    def _setup_logging(level: str = "INFO") -> logging.Logger:
        logger = logging.getLogger("lowthrust")
        logger.setLevel(getattr(logging, level, logging.INFO))
        if logger.handlers:
            return logger
        formatter = logging.Formatter("%(asctime)s %(levelname)s %(message)s")
        console_handler = logging.StreamHandler()
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)
        return logger


def main(argv: Sequence[str] | None = None) -> int:
    return LowThrustApp(argv).run()


if __name__ == "__main__":
    sys.exit(main())
