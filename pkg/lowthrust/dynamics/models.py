from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from typing import NamedTuple

import numpy as np

from lowthrust import constants
from lowthrust.errors import ValidationError


class MeeState(NamedTuple):
    """修正春分点根数 [p, f, g, h, k, L]，L 不做 2π 折叠。"""

    p: float
    f: float
    g: float
    h: float
    k: float
    L: float

    @classmethod
    def from_array(cls, values) -> "MeeState":
        arr = np.asarray(values, dtype=float).reshape(6)
        return cls(*(float(v) for v in arr))

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=float)


@dataclass(frozen=True)
class Propulsion:
    t_max: float
    isp_g0: float
    m0: float = 1.0

    def __post_init__(self) -> None:
        for name in ("t_max", "isp_g0", "m0"):
            value = getattr(self, name)
            if not value > 0:
                raise ValidationError(name, f"必须为正数，当前为 {value!r}")

    @property
    def accel(self) -> float:
        """T_max / m0，满推力下的初始加速度。"""
        return self.t_max / self.m0


@dataclass(frozen=True)
class PerturbationConfig:
    mu: float
    j2_enabled: bool = False
    j2: float = constants.J2_EARTH
    r_earth: float = 1.0
    eclipse_enabled: bool = False
    eclipse_scale: float = 1.0
    c_t: float = constants.ECLIPSE_CT
    c_s: float = constants.ECLIPSE_CS
    epoch: datetime | None = None
    time_unit: float = constants.DAY_S
    sun_direction_override: tuple[float, float, float] | None = field(
        default=None, compare=False
    )

    def __post_init__(self) -> None:
        if not self.mu > 0:
            raise ValidationError("mu", "引力常数必须为正")
        if not 0.0 <= self.eclipse_scale <= 1.0:
            raise ValidationError("eclipse_scale", "ε 必须位于 [0, 1]")
        if not self.c_t > 0:
            raise ValidationError("c_t", "c_t 必须为正")
        if not 0.0 < self.c_s <= 1.0:
            raise ValidationError("c_s", "c_s 必须位于 (0, 1]")
        if not self.r_earth > 0:
            raise ValidationError("r_earth", "地球半径必须为正")

    @property
    def shadow_params(self) -> dict[str, float]:
        return {"c_t": self.c_t, "c_s": self.c_s}

    @property
    def eclipse_active(self) -> bool:
        return self.eclipse_enabled and self.eclipse_scale > 0.0


@dataclass(frozen=True)
class ControlInput:
    throttle: float
    direction: tuple[float, float, float]

    def as_vector(self) -> np.ndarray:
        return self.throttle * np.asarray(self.direction, dtype=float)


def mee_position(x) -> np.ndarray:
    """由 MEE 计算惯性系位置矢量，支持 (..., 6) 批量输入。"""
    x = np.asarray(x, dtype=float)
    p, f, g, h, k, L = np.moveaxis(x, -1, 0)
    cos_l = np.cos(L)
    sin_l = np.sin(L)
    w = 1.0 + f * cos_l + g * sin_l
    r = p / w
    alpha2 = h * h - k * k
    s2 = 1.0 + h * h + k * k
    scale = r / s2
    return np.stack(
        (
            scale * (cos_l + alpha2 * cos_l + 2.0 * h * k * sin_l),
            scale * (sin_l - alpha2 * sin_l + 2.0 * h * k * cos_l),
            scale * 2.0 * (h * sin_l - k * cos_l),
        ),
        axis=-1,
    )
