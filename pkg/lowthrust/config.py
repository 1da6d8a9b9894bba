import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Any

from lowthrust import constants
from lowthrust.errors import ParseError, ValidationError
from lowthrust.units.scaling import CanonicalMission, canonicalize

BUNDLED_MISSIONS = ("tempel1", "dionysus", "gtoc9")


@dataclass(frozen=True)
class SolverSettings:
    propagation_tol: float = 1e-12
    root_tol: float = 1e-10
    max_iter: int = 200
    root_method: str = "newton"
    k_steps: int = 5
    k_max: float = 0.99
    deps: float = 0.1
    samples: int = 400
    gamma_tr_tol: float = 1e-6
    tof_tol: float = 1e-4
    eclipse_ct: float = constants.ECLIPSE_CT
    eclipse_cs: float = constants.ECLIPSE_CS


@dataclass(frozen=True)
class MissionConfig:
    name: str
    regime: str
    x0: tuple[float, ...]
    x1: tuple[float, ...]
    tof_days: float
    isp_s: float
    t_max_n: float
    m0_kg: float
    x1_revolutions: int = 0
    state_units: str = "canonical"
    tof_upper_days: float | None = None
    epoch: datetime | None = None
    j2: bool = False
    eclipse: bool = False
    solver: SolverSettings = field(default_factory=SolverSettings)
    scaled: CanonicalMission | None = field(default=None, compare=False, repr=False)


class MissionFile:
    """任务 JSON 文件：默认值 + 文件内容合并，再逐字段规范化与校验。"""

    def __init__(self, path: Path) -> None:
        self._path = Path(path)
        self._data = self._default_data()

    @staticmethod
    def _default_data() -> dict:
        return {
            "name": "",
            "regime": constants.REGIME_HELIOCENTRIC,
            "x0": None,
            "x1": None,
            "x1_revolutions": 0,
            "state_units": "canonical",
            "tof_days": None,
            "tof_upper_days": None,
            "isp_s": None,
            "t_max_n": None,
            "m0_kg": None,
            "epoch": None,
            "flags": {"j2": False, "eclipse": False},
            "solver": {},
        }

    def load(self) -> MissionConfig:
        if not self._path.exists():
            raise ParseError(f"任务文件不存在：{self._path}")
        try:
            data = json.loads(self._path.read_text(encoding="utf-8"))
        except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ParseError(f"无法解析任务文件 {self._path}：{exc}") from exc
        if not isinstance(data, dict):
            raise ParseError(f"任务文件顶层必须是对象：{self._path}")

        self._data = self._default_data()
        self._data.update({key: value for key, value in data.items() if key != "flags"})
        self._data["flags"].update(data.get("flags") or {})
        return self._build()

    def _build(self) -> MissionConfig:
        data = self._data
        regime = self._normalize_choice(
            "regime", data["regime"], {constants.REGIME_HELIOCENTRIC, constants.REGIME_GEOCENTRIC}
        )
        flags = data["flags"]
        j2 = bool(flags.get("j2", False))
        eclipse = bool(flags.get("eclipse", False))
        epoch = self._normalize_epoch(data["epoch"])
        if eclipse and epoch is None:
            raise ValidationError("epoch", "启用阴影时必须提供历元")

        tof_days = self._positive("tof_days", data["tof_days"])
        tof_upper = data["tof_upper_days"]
        revolutions = data["x1_revolutions"]
        if not isinstance(revolutions, int) or isinstance(revolutions, bool) or revolutions < 0:
            raise ValidationError("x1_revolutions", "必须为非负整数")

        return MissionConfig(
            name=str(data["name"] or self._path.stem),
            regime=regime,
            x0=self._normalize_state("x0", data["x0"]),
            x1=self._normalize_state("x1", data["x1"]),
            x1_revolutions=revolutions,
            state_units=self._normalize_choice("state_units", data["state_units"], {"canonical", "km"}),
            tof_days=tof_days,
            tof_upper_days=None if tof_upper is None else self._positive("tof_upper_days", tof_upper),
            isp_s=self._positive("isp_s", data["isp_s"]),
            t_max_n=self._positive("t_max_n", data["t_max_n"]),
            m0_kg=self._positive("m0_kg", data["m0_kg"]),
            epoch=epoch,
            j2=j2,
            eclipse=eclipse,
            solver=self._normalize_solver(data["solver"]),
        )

    @staticmethod
    def _positive(name: str, value: Any) -> float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValidationError(name, f"缺失或不是数字：{value!r}")
        value = float(value)
        if not math.isfinite(value) or value <= 0.0:
            raise ValidationError(name, f"必须为正数，当前为 {value}")
        return value

    @staticmethod
    def _normalize_choice(name: str, value: Any, allowed: set[str]) -> str:
        text = str(value or "").strip().lower()
        if text not in allowed:
            raise ValidationError(name, f"取值 {value!r} 不在 {sorted(allowed)} 中")
        return text

    @staticmethod
    def _normalize_state(name: str, value: Any) -> tuple[float, ...]:
        if not isinstance(value, (list, tuple)) or len(value) != 6:
            raise ValidationError(name, "必须是 6 个数字 [p, f, g, h, k, L]")
        try:
            state = tuple(float(v) for v in value)
        except (TypeError, ValueError) as exc:
            raise ValidationError(name, f"包含非数字元素：{exc}") from exc
        if not all(math.isfinite(v) for v in state):
            raise ValidationError(name, "包含非有限值")
        if state[0] <= 0.0:
            raise ValidationError(name, "半通径 p 必须为正")
        return state

    @staticmethod
    def _normalize_epoch(value: Any) -> datetime | None:
        if value in (None, ""):
            return None
        text = str(value).strip()
        if text.endswith("Z"):
            text = text[:-1] + "+00:00"
        try:
            moment = datetime.fromisoformat(text)
        except ValueError as exc:
            raise ValidationError("epoch", f"无法解析 ISO-8601 时间 {value!r}") from exc
        if moment.tzinfo is None:
            moment = moment.replace(tzinfo=timezone.utc)
        return moment.astimezone(timezone.utc)

    @classmethod
    def _normalize_solver(cls, value: Any) -> SolverSettings:
        if value is None:
            value = {}
        if not isinstance(value, dict):
            raise ValidationError("solver", "必须是对象")
        defaults = SolverSettings()
        unknown = set(value) - set(defaults.__dataclass_fields__)
        if unknown:
            raise ValidationError("solver", f"未知字段 {sorted(unknown)}")

        merged = {name: value.get(name, getattr(defaults, name)) for name in defaults.__dataclass_fields__}
        for name in (
            "propagation_tol",
            "root_tol",
            "deps",
            "gamma_tr_tol",
            "tof_tol",
            "eclipse_ct",
            "eclipse_cs",
        ):
            merged[name] = cls._positive(f"solver.{name}", merged[name])
        for name in ("max_iter", "k_steps", "samples"):
            number = merged[name]
            if isinstance(number, bool) or not isinstance(number, int) or number < 1:
                raise ValidationError(f"solver.{name}", "必须为正整数")
        merged["root_method"] = cls._normalize_choice("solver.root_method", merged["root_method"], {"newton", "hybr"})
        merged["k_max"] = float(merged["k_max"])
        if not 0.0 <= merged["k_max"] < 1.0:
            raise ValidationError("solver.k_max", "必须位于 [0, 1)")
        if merged["deps"] > 1.0:
            raise ValidationError("solver.deps", "Δε 不能大于 1")
        if merged["eclipse_cs"] > 1.0:
            raise ValidationError("solver.eclipse_cs", "c_s 必须位于 (0, 1]")
        return SolverSettings(**merged)


def resolve_mission_path(path_or_name: str | Path) -> Path:
    """裸名称（tempel1 / dionysus / gtoc9）解析为包内任务文件。"""
    text = str(path_or_name)
    if text in BUNDLED_MISSIONS:
        return Path(str(resources.files("lowthrust.missions").joinpath(f"{text}.json")))
    return Path(path_or_name)


def load_mission(path_or_name: str | Path) -> MissionConfig:
    return MissionFile(resolve_mission_path(path_or_name)).load()


def resolve_problem(
    problem: "MissionConfig | CanonicalMission",
    settings: SolverSettings | None = None,
) -> tuple[CanonicalMission, SolverSettings]:
    """统一求解器入口参数：返回标准单位任务与求解器设置。"""
    if isinstance(problem, CanonicalMission):
        return problem, settings or SolverSettings()
    scaled = canonicalize(problem).scaled
    return scaled, settings or problem.solver
