from __future__ import annotations

import math

import numpy as np

from lowthrust.dynamics.models import ControlInput, PerturbationConfig, Propulsion
from lowthrust.dynamics.perturbations import eclipse_factor, j2_accel
from lowthrust.errors import DegenerateOrbit, NegativeDeltaV, ValidationError


def _check_geometry(p: np.ndarray, w: np.ndarray) -> None:
    if np.any(p <= 0.0):
        raise DegenerateOrbit("半通径 p 必须为正")
    if np.any(w <= 0.0):
        raise DegenerateOrbit("w = 1 + f·cosL + g·sinL 必须为正")


def gve_matrices(x, mu: float) -> tuple[np.ndarray, np.ndarray]:
    """
    MEE 高斯摄动方程的漂移项 A 与控制矩阵 B（RTN 加速度）。

    Args:
        x: 形状 (..., 6) 的状态
        mu: 引力常数（标准单位）

    Returns:
        A 形状 (..., 6)，B 形状 (..., 6, 3)
    """
    x = np.asarray(x, dtype=float)
    p, f, g, h, k, L = np.moveaxis(x, -1, 0)
    cos_l = np.cos(L)
    sin_l = np.sin(L)
    w = 1.0 + f * cos_l + g * sin_l
    _check_geometry(p, w)

    sqrt_p_mu = np.sqrt(p / mu)
    s2 = 1.0 + h * h + k * k
    hk = h * sin_l - k * cos_l
    zero = np.zeros_like(p)

    A = np.stack((zero, zero, zero, zero, zero, np.sqrt(mu * p) * (w / p) ** 2), axis=-1)

    rows = (
        (zero, 2.0 * p / w, zero),
        (sin_l, ((w + 1.0) * cos_l + f) / w, -g * hk / w),
        (-cos_l, ((w + 1.0) * sin_l + g) / w, f * hk / w),
        (zero, zero, s2 * cos_l / (2.0 * w)),
        (zero, zero, s2 * sin_l / (2.0 * w)),
        (zero, zero, hk / w),
    )
    B = np.stack([np.stack(row, axis=-1) for row in rows], axis=-2)
    B = B * sqrt_p_mu[..., None, None]
    return A, B


def mass_from_dv(dv: float, prop: Propulsion) -> float:
    """火箭方程 m = m0·exp(-Δv / (Isp·g0))。"""
    if dv < 0:
        raise NegativeDeltaV(f"Δv 不能为负：{dv}")
    if math.isinf(prop.isp_g0):
        return prop.m0
    return prop.m0 * math.exp(-dv / prop.isp_g0)


def dv_from_mass(m: float, prop: Propulsion) -> float:
    return prop.isp_g0 * math.log(prop.m0 / m)


def drift(x, t: float, pc: PerturbationConfig) -> np.ndarray:
    """无控制时的状态导数 A + B·ΔJ2。"""
    A, B = gve_matrices(x, pc.mu)
    if not pc.j2_enabled:
        return A
    return A + np.einsum("...ij,...j->...i", B, j2_accel(x, None, pc))


def thrust_scale(x, t: float, pc: PerturbationConfig) -> np.ndarray | float:
    """阴影对推力的缩放 1 - ε·ν。"""
    if not pc.eclipse_active:
        return 1.0
    return 1.0 - pc.eclipse_scale * eclipse_factor(x, t, pc)


def state_rate(
    x,
    m: float,
    u: ControlInput,
    prop: Propulsion,
    pc: PerturbationConfig,
    t: float = 0.0,
) -> np.ndarray:
    """ẋ = A + B·(T_max/m0)·(1 − εν)·Γ·α̂ + B·ΔJ2，m 仅用于检查 Γ ≤ m0/m。"""
    if u.throttle < 0.0 or u.throttle > prop.m0 / m * (1.0 + 1e-12):
        raise ValidationError("throttle", f"Γ={u.throttle} 超出 [0, m0/m]")
    A, B = gve_matrices(x, pc.mu)
    accel = prop.accel * thrust_scale(x, t, pc) * u.as_vector()
    if pc.j2_enabled:
        accel = accel + j2_accel(x, None, pc)
    return A + B @ accel
