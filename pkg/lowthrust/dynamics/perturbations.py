from __future__ import annotations

import math
from datetime import datetime, timezone
from functools import lru_cache

import numpy as np

from lowthrust.dynamics.models import PerturbationConfig, mee_position
from lowthrust.errors import EpochUnavailable

J2000_JD = 2451545.0
UNIX_EPOCH_JD = 2440587.5


def j2_accel(x, r, pc: PerturbationConfig) -> np.ndarray:
    """
    J2 摄动加速度（RTN 分量）。

    Args:
        x: 形状 (..., 6) 的 MEE 状态
        r: 地心距；为 None 时按 p / w 计算
        pc: 摄动参数（mu、J2、R_E 均为标准单位）

    Returns:
        形状 (..., 3) 的 [径向, 横向, 法向] 加速度
    """
    x = np.asarray(x, dtype=float)
    p, f, g, h, k, L = np.moveaxis(x, -1, 0)
    cos_l = np.cos(L)
    sin_l = np.sin(L)
    if r is None:
        r = p / (1.0 + f * cos_l + g * sin_l)
    r = np.asarray(r, dtype=float)

    s2 = 1.0 + h * h + k * k
    hk_s = h * sin_l - k * cos_l
    hk_c = h * cos_l + k * sin_l
    coeff = -3.0 * pc.mu * pc.j2 * pc.r_earth**2 / (2.0 * r**4 * s2**2)
    return np.stack(
        (
            coeff * (s2**2 - 12.0 * hk_s**2),
            coeff * 8.0 * hk_s * hk_c,
            coeff * 4.0 * hk_s * (1.0 - h * h - k * k),
        ),
        axis=-1,
    )


def julian_date(moment: datetime) -> float:
    if moment.tzinfo is None:
        moment = moment.replace(tzinfo=timezone.utc)
    return moment.timestamp() / 86400.0 + UNIX_EPOCH_JD


@lru_cache(maxsize=4096)
def _sun_unit_vector(julian_day: float) -> tuple[float, float, float]:
    # 低精度太阳历表（平根数公式，精度约 0.01°），地心赤道惯性系
    n = julian_day - J2000_JD
    mean_long = math.radians((280.460 + 0.9856474 * n) % 360.0)
    mean_anom = math.radians((357.528 + 0.9856003 * n) % 360.0)
    ecliptic_long = (
        mean_long
        + math.radians(1.915) * math.sin(mean_anom)
        + math.radians(0.020) * math.sin(2.0 * mean_anom)
    )
    obliquity = math.radians(23.439 - 0.0000004 * n)
    vec = (
        math.cos(ecliptic_long),
        math.cos(obliquity) * math.sin(ecliptic_long),
        math.sin(obliquity) * math.sin(ecliptic_long),
    )
    norm = math.sqrt(sum(c * c for c in vec))
    return vec[0] / norm, vec[1] / norm, vec[2] / norm


def sun_direction(t: float, pc: PerturbationConfig) -> np.ndarray:
    """历元 + t 时刻地心指向太阳的单位矢量。"""
    if pc.sun_direction_override is not None:
        vec = np.asarray(pc.sun_direction_override, dtype=float)
        return vec / np.linalg.norm(vec)
    if pc.epoch is None:
        raise EpochUnavailable("启用阴影时必须提供历元 epoch")
    jd = julian_date(pc.epoch) + float(t) * pc.time_unit / 86400.0
    return np.array(_sun_unit_vector(jd))


def shadow_factor(position, sun_dir: np.ndarray, pc: PerturbationConfig) -> np.ndarray:
    """
    平滑圆柱阴影因子 ν。

    本影取半径 c_s·R_E 的圆柱；ν = ½(1 − tanh(c_t·d)) 乘以背日侧开关，
    d 为以 R_E 归一化的带符号穿透距离（在阴影外为正）。
    """
    position = np.asarray(position, dtype=float)
    along = position @ sun_dir
    perp = np.linalg.norm(position - along[..., None] * sun_dir, axis=-1)
    depth = (perp - pc.c_s * pc.r_earth) / pc.r_earth
    inside = 0.5 * (1.0 - np.tanh(pc.c_t * depth))
    behind = 0.5 * (1.0 - np.tanh(pc.c_t * along / pc.r_earth))
    return inside * behind


def eclipse_factor(x, t: float, pc: PerturbationConfig) -> np.ndarray | float:
    """阴影因子 ν ∈ [0, 1]；未启用阴影时恒为 0。"""
    if not pc.eclipse_enabled:
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1]) if x.ndim > 1 else 0.0
    nu = shadow_factor(mee_position(x), sun_direction(t, pc), pc)
    return float(nu) if np.ndim(nu) == 0 else nu
