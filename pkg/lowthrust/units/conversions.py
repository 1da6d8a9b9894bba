from __future__ import annotations

from typing import NamedTuple

import numpy as np

from lowthrust.dynamics.models import MeeState, mee_position
from lowthrust.errors import DegenerateOrbit, NonPositiveSemiLatus, RetrogradeSingularity

RETROGRADE_TOL = 1e-12


class CartesianState(NamedTuple):
    position: np.ndarray
    velocity: np.ndarray


def mee_to_cartesian(x, mu: float) -> CartesianState:
    """修正春分点根数 -> 惯性系位置/速度。"""
    p, f, g, h, k, L = np.asarray(x, dtype=float).reshape(6)
    if p <= 0.0:
        raise NonPositiveSemiLatus(f"p={p} 必须为正")
    cos_l = np.cos(L)
    sin_l = np.sin(L)
    if 1.0 + f * cos_l + g * sin_l <= 0.0:
        raise DegenerateOrbit("w = 1 + f·cosL + g·sinL 必须为正")

    alpha2 = h * h - k * k
    s2 = 1.0 + h * h + k * k
    scale = np.sqrt(mu / p) / s2
    velocity = scale * np.array(
        [
            -sin_l - alpha2 * sin_l + 2.0 * h * k * cos_l - g + 2.0 * f * h * k - alpha2 * g,
            cos_l - alpha2 * cos_l - 2.0 * h * k * sin_l + f - 2.0 * g * h * k - alpha2 * f,
            2.0 * (h * cos_l + k * sin_l + f * h + g * k),
        ]
    )
    return CartesianState(mee_position([p, f, g, h, k, L]), velocity)


def cartesian_to_mee(s: CartesianState, mu: float) -> MeeState:
    """惯性系位置/速度 -> 修正春分点根数，L 落在 (-π, π]。"""
    rr = np.asarray(s.position, dtype=float).reshape(3)
    vv = np.asarray(s.velocity, dtype=float).reshape(3)
    radius = np.linalg.norm(rr)
    if radius <= 0.0:
        raise DegenerateOrbit("位置矢量为零")

    hv = np.cross(rr, vv)
    hmag = np.linalg.norm(hv)
    if hmag <= 1e-14 * radius * max(np.linalg.norm(vv), 1.0):
        raise DegenerateOrbit("角动量为零（直线轨道）")
    hhat = hv / hmag
    denom = 1.0 + hhat[2]
    if denom <= RETROGRADE_TOL:
        raise RetrogradeSingularity("倾角接近 180°，h/k 无定义")

    p = hmag**2 / mu
    k_mee = hhat[0] / denom
    h_mee = -hhat[1] / denom

    s2 = 1.0 + k_mee**2 + h_mee**2
    f_hat = np.array([1.0 - k_mee**2 + h_mee**2, 2.0 * k_mee * h_mee, -2.0 * k_mee]) / s2
    g_hat = np.array([2.0 * k_mee * h_mee, 1.0 + k_mee**2 - h_mee**2, 2.0 * h_mee]) / s2

    ecc = np.cross(vv, hv) / mu - rr / radius
    f = float(ecc @ f_hat)
    g = float(ecc @ g_hat)

    u_hat = rr / radius
    v_hat = (radius * vv - (rr @ vv) / radius * rr) / hmag
    L = float(np.arctan2(u_hat[1] - v_hat[0], u_hat[0] + v_hat[1]))
    return MeeState(float(p), f, g, float(h_mee), float(k_mee), L)
