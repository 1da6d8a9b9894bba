from __future__ import annotations

import logging

import numpy as np

from lowthrust.dynamics.models import Propulsion
from lowthrust.errors import Unbracketable, ValidationError
from lowthrust.numerics.propagation import full_throttle_dv

logger = logging.getLogger(__name__)

GAMMA_TR_TOL = 1e-6
MAX_BISECTIONS = 60


def on_time(times: np.ndarray, gamma: np.ndarray, threshold: float) -> float:
    """{t : Γ_e(t) > threshold} 的测度，相邻采样点之间线性插值。"""
    dt = np.diff(times)
    g0 = gamma[:-1] - threshold
    g1 = gamma[1:] - threshold
    both = (g0 > 0.0) & (g1 > 0.0)
    crossing = (g0 > 0.0) != (g1 > 0.0)

    total = float(np.sum(dt[both]))
    if np.any(crossing):
        a = g0[crossing]
        b = g1[crossing]
        above = np.where(a > 0.0, a, b)
        fraction = above / (np.abs(a) + np.abs(b))
        total += float(np.sum(dt[crossing] * fraction))
    return total


def threshold_for_profile(
    times,
    gamma,
    dv_target: float,
    prop: Propulsion,
    tol: float = GAMMA_TR_TOL,
    max_iter: int = MAX_BISECTIONS,
) -> float:
    """
    对 Γ_TR ∈ [0, max Γ_e] 二分，使 bang-bang 剖面的 Δv 等于 dv_target。

    Γ_e > Γ_TR 处满推力（Γ_f = m0/m），否则滑行；满推力下推力恒为 T_max，
    所以 Δv 只取决于总开机时长。
    """
    times = np.asarray(times, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    if times.shape != gamma.shape or times.size < 2:
        raise ValidationError("gamma_e_profile", "采样时刻与 Γ_e 长度不一致或少于 2 点")

    def dv_at(threshold: float) -> float:
        return full_throttle_dv(on_time(times, gamma, threshold), prop)

    lo, hi = 0.0, float(np.max(gamma))
    best, best_err = lo, abs(dv_at(lo) - dv_target)
    if dv_at(lo) < dv_target - tol:
        raise Unbracketable(f"Γ_TR=0 时 Δv 仍小于目标 {dv_target:.6g}", best=lo)

    for iteration in range(max_iter):
        mid = 0.5 * (lo + hi)
        dv = dv_at(mid)
        err = abs(dv - dv_target)
        if err < best_err:
            best, best_err = mid, err
        logger.debug("Γ_TR 二分 %d：Γ_TR=%.8f，ΔΔv=%.3e", iteration, mid, dv - dv_target)
        if err <= tol:
            return mid
        if dv > dv_target:
            lo = mid
        else:
            hi = mid
    raise Unbracketable(f"{max_iter} 次二分后 |ΔΔv|={best_err:.3e} 仍大于容差", best=best)
