from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from lowthrust.dynamics.equations import gve_matrices, thrust_scale
from lowthrust.dynamics.models import PerturbationConfig, Propulsion
from lowthrust.dynamics.perturbations import j2_accel
from lowthrust.errors import DegenerateOrbit, ValidationError, ZeroPrimer

ZERO_PRIMER_TOL = 1e-14
FD_STEP = np.finfo(float).eps ** (1.0 / 3.0)


class LawKind(str, Enum):
    EO = "EO"
    SFO = "SFO"
    FO = "FO"
    TO = "TO"


@dataclass(frozen=True)
class ControlLaw:
    kind: LawKind
    gamma_tr: float = 1.0
    smoothing_k: float = 0.0
    beta_t: float = 1.0

    def __post_init__(self) -> None:
        if self.gamma_tr < 0.0:
            raise ValidationError("gamma_tr", "Γ_TR 不能为负")
        if not 0.0 <= self.smoothing_k < 1.0:
            raise ValidationError("smoothing_k", "平滑参数 k 必须位于 [0, 1)")

    @classmethod
    def energy(cls) -> "ControlLaw":
        return cls(LawKind.EO)

    @classmethod
    def smoothed(cls, gamma_tr: float, k: float) -> "ControlLaw":
        return cls(LawKind.SFO, gamma_tr=gamma_tr, smoothing_k=k)

    @classmethod
    def fuel(cls, gamma_tr: float) -> "ControlLaw":
        return cls(LawKind.FO, gamma_tr=gamma_tr)

    @classmethod
    def time(cls, beta_t: float) -> "ControlLaw":
        return cls(LawKind.TO, beta_t=beta_t)


class Costates(NamedTuple):
    lam_p: float
    lam_f: float
    lam_g: float
    lam_h: float
    lam_k: float
    lam_L: float

    @classmethod
    def from_array(cls, values) -> "Costates":
        arr = np.asarray(values, dtype=float).reshape(6)
        return cls(*(float(v) for v in arr))

    @classmethod
    def zeros(cls) -> "Costates":
        return cls(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=float)


def primer_vector(B: np.ndarray, lam) -> np.ndarray:
    """Bᵀλ，支持批量。"""
    return np.einsum("...ij,...i->...j", B, np.asarray(lam, dtype=float))


def optimal_direction(primer) -> np.ndarray:
    """α̂* = −Bᵀλ / ‖Bᵀλ‖。"""
    primer = np.asarray(primer, dtype=float)
    norm = np.linalg.norm(primer)
    if norm < ZERO_PRIMER_TOL:
        raise ZeroPrimer("主矢量为零，推力方向无定义")
    return -primer / norm


def directions(primer: np.ndarray) -> np.ndarray:
    """批量版 optimal_direction，主矢量为零处返回零向量。"""
    norm = np.linalg.norm(primer, axis=-1, keepdims=True)
    safe = np.where(norm < ZERO_PRIMER_TOL, 1.0, norm)
    return np.where(norm < ZERO_PRIMER_TOL, 0.0, -primer / safe)


def switching_function(primer, gamma_tr: float):
    """ρ = Γ_TR − ‖Bᵀλ‖。"""
    return gamma_tr - np.linalg.norm(np.asarray(primer, dtype=float), axis=-1)


def throttle(law: ControlLaw, primer, m, m0: float):
    """
    最优油门 Γ*。

    EO 取 ‖Bᵀλ‖；FO 为 bang-bang，ρ = 0 视为滑行；SFO 用 tanh 平滑；TO 恒为 m0/m。
    """
    primer = np.asarray(primer, dtype=float)
    norm = np.linalg.norm(primer, axis=-1)
    full = m0 / np.asarray(m, dtype=float)
    if law.kind is LawKind.EO:
        return norm
    if law.kind is LawKind.TO:
        return np.broadcast_to(full, norm.shape) * np.ones_like(norm)
    rho = law.gamma_tr - norm
    if law.kind is LawKind.FO:
        return np.where(rho < 0.0, full, 0.0) * np.ones_like(norm)
    return 0.5 * full * (1.0 - np.tanh(rho / (1.0 - law.smoothing_k)))


class Terms(NamedTuple):
    A: np.ndarray
    B: np.ndarray
    primer: np.ndarray
    gamma: np.ndarray
    scale: np.ndarray | float
    perturbation: np.ndarray | float
    hamiltonian: np.ndarray


def evaluate(x, lam, m, law: ControlLaw, prop: Propulsion, pc: PerturbationConfig, t: float = 0.0) -> Terms:
    """计算批量状态下的 A、B、主矢量、最优油门与哈密顿函数。"""
    x = np.asarray(x, dtype=float)
    lam = np.asarray(lam, dtype=float)
    A, B = gve_matrices(x, pc.mu)
    primer = primer_vector(B, lam)
    norm = np.linalg.norm(primer, axis=-1)
    gamma = throttle(law, primer, m, prop.m0)
    scale = thrust_scale(x, t, pc)
    accel = prop.accel

    if pc.j2_enabled:
        perturbation = np.einsum("...ij,...j->...i", B, j2_accel(x, None, pc))
        lam_pert = np.einsum("...i,...i->...", lam, perturbation)
    else:
        perturbation = 0.0
        lam_pert = 0.0

    H = np.einsum("...i,...i->...", lam, A) + lam_pert - accel * scale * gamma * norm
    if law.kind is LawKind.EO:
        H = H + 0.5 * accel * gamma**2
    elif law.kind is LawKind.TO:
        H = H + law.beta_t
    else:
        H = H + law.gamma_tr * accel * gamma
    return Terms(A, B, primer, gamma, scale, perturbation, H)


def hamiltonian(x, lam, m, law: ControlLaw, prop: Propulsion, pc: PerturbationConfig, t: float = 0.0):
    """H = λᵀ(A + B·(T_max/m0)·Γ*·α̂* + B·ΔJ2) + 运行代价。"""
    H = evaluate(x, lam, m, law, prop, pc, t).hamiltonian
    return float(H) if np.ndim(H) == 0 else H


def fd_steps(x: np.ndarray) -> np.ndarray:
    return FD_STEP * np.maximum(1.0, np.abs(x))


def perturbed_states(x: np.ndarray, steps: np.ndarray) -> np.ndarray:
    """返回 [x, x + h_i e_i (6 行), x − h_i e_i (6 行)]。"""
    offsets = np.diag(steps)
    return np.concatenate((x[None, :], x + offsets, x - offsets))


def costate_rate_fd(x, lam, m, law: ControlLaw, prop: Propulsion, pc: PerturbationConfig, t: float = 0.0) -> np.ndarray:
    """λ̇ = −∂H/∂x，对 H 做中心差分，控制在每个扰动点按 λ 重新求取。"""
    x = np.asarray(x, dtype=float).reshape(6)
    steps = fd_steps(x)
    H = evaluate(perturbed_states(x, steps)[1:], lam, m, law, prop, pc, t).hamiltonian
    return -(H[:6] - H[6:]) / (2.0 * steps)


class _Frame(NamedTuple):
    """单个状态点上 GVE 的公共中间量。"""

    p: float
    f: float
    g: float
    h: float
    k: float
    c: float
    sn: float
    w: float
    w_l: float
    s: float
    s2: float
    q: float
    q_l: float
    a_l: float


def _frame(x, mu: float) -> _Frame:
    p, f, g, h, k, L = (float(v) for v in x)
    c = math.cos(L)
    sn = math.sin(L)
    w = 1.0 + f * c + g * sn
    if not p > 0.0:
        raise DegenerateOrbit("半通径 p 必须为正")
    if not w > 0.0:
        raise DegenerateOrbit("w = 1 + f·cosL + g·sinL 必须为正")
    return _Frame(
        p,
        f,
        g,
        h,
        k,
        c,
        sn,
        w,
        g * c - f * sn,
        math.sqrt(p / mu),
        1.0 + h * h + k * k,
        h * sn - k * c,
        h * c + k * sn,
        math.sqrt(mu) * w * w / p**1.5,
    )


def _primer(fr: _Frame, lam: tuple[float, ...]) -> tuple[float, float, float]:
    lp, lf, lg, lh, lk, lL = lam
    mixed = lL - lf * fr.g + lg * fr.f
    normal = fr.q * mixed + 0.5 * fr.s2 * (lh * fr.c + lk * fr.sn)
    return (
        fr.s * (lf * fr.sn - lg * fr.c),
        fr.s
        * (
            2.0 * lp * fr.p / fr.w
            + lf * (fr.c + (fr.c + fr.f) / fr.w)
            + lg * (fr.sn + (fr.sn + fr.g) / fr.w)
        ),
        fr.s * normal / fr.w,
    )


def _bilinear_gradient(fr: _Frame, lam: tuple[float, ...], ur: float, ut: float, un: float) -> list[float]:
    """∇ₓ[λᵀ·B(x)·u]，u 为固定的 RTN 矢量。"""
    lp, lf, lg, lh, lk, lL = lam
    p, f, g, h, k = fr.p, fr.f, fr.g, fr.h, fr.k
    c, sn, w, w_l = fr.c, fr.sn, fr.w, fr.w_l
    w2 = w * w

    mixed = lL - lf * g + lg * f
    tilt = lh * c + lk * sn
    normal = fr.q * mixed + 0.5 * fr.s2 * tilt
    radial = lf * sn - lg * c
    transverse = 2.0 * lp * p / w + lf * (c + (c + f) / w) + lg * (sn + (sn + g) / w)
    psi = ur * radial + ut * transverse + un * normal / w

    d_p = ut * 2.0 * lp / w
    d_f = ut * (-2.0 * lp * p * c + lf * (w - (c + f) * c) - lg * (sn + g) * c) / w2 + un * (
        fr.q * lg / w - normal * c / w2
    )
    d_g = ut * (-2.0 * lp * p * sn - lf * (c + f) * sn + lg * (w - (sn + g) * sn)) / w2 + un * (
        -fr.q * lf / w - normal * sn / w2
    )
    d_h = un * (sn * mixed + h * tilt) / w
    d_k = un * (k * tilt - c * mixed) / w
    normal_l = fr.q_l * mixed + 0.5 * fr.s2 * (lk * c - lh * sn)
    d_l = (
        ur * (lf * c + lg * sn)
        + ut
        * (
            -2.0 * lp * p * w_l / w2
            + lf * (-sn - (sn * w + (c + f) * w_l) / w2)
            + lg * (c + (c * w - (sn + g) * w_l) / w2)
        )
        + un * (normal_l / w - normal * w_l / w2)
    )
    s = fr.s
    return [s * (psi / (2.0 * p) + d_p), s * d_f, s * d_g, s * d_h, s * d_k, s * d_l]


def _kepler_gradient(fr: _Frame, lam: tuple[float, ...], ur: float, ut: float, un: float) -> np.ndarray:
    grad = np.array(_bilinear_gradient(fr, lam, ur, ut, un))
    lL = lam[5]
    grad[0] -= 1.5 * lL * fr.a_l / fr.p
    grad[1] += 2.0 * lL * fr.a_l * fr.c / fr.w
    grad[2] += 2.0 * lL * fr.a_l * fr.sn / fr.w
    grad[5] += 2.0 * lL * fr.a_l * fr.w_l / fr.w
    return grad


def hamiltonian_gradient(x, lam, u, mu: float) -> np.ndarray:
    """∇ₓ[λᵀ(A(x) + B(x)·u)]，u 为固定的 RTN 加速度。"""
    ur, ut, un = (float(v) for v in u)
    return _kepler_gradient(_frame(x, mu), tuple(float(v) for v in lam), ur, ut, un)


def _scalar_throttle(law: ControlLaw, norm: float, full: float) -> float:
    if law.kind is LawKind.EO:
        return norm
    if law.kind is LawKind.TO:
        return full
    rho = law.gamma_tr - norm
    if law.kind is LawKind.FO:
        return full if rho < 0.0 else 0.0
    return 0.5 * full * (1.0 - math.tanh(rho / (1.0 - law.smoothing_k)))


def _fd_gradient(fn, x: np.ndarray) -> np.ndarray:
    """批量函数 fn 在 x 处的中心差分梯度，fn 作用于 (12, 6) 的扰动状态。"""
    steps = fd_steps(x)
    values = fn(perturbed_states(x, steps)[1:])
    return (values[:6] - values[6:]) / (2.0 * steps)


def extremal_rates(
    x,
    lam,
    m: float,
    law: ControlLaw,
    prop: Propulsion,
    pc: PerturbationConfig,
    t: float = 0.0,
) -> tuple[np.ndarray, np.ndarray, float]:
    """
    同时得到 ẋ、λ̇ 与 Δv 变化率。

    ∂H/∂x 按解析式计算：最优方向与油门冻结后对 λᵀ(A + B·u) 求导，
    再补上油门随主矢量变化的项（EO 带阴影、SFO）。J2 加速度与阴影缩放
    对状态的导数用中心差分。
    """
    x = np.asarray(x, dtype=float)
    fr = _frame(x, pc.mu)
    lam = tuple(float(v) for v in lam)
    pr, pt, pn = _primer(fr, lam)
    norm = math.sqrt(pr * pr + pt * pt + pn * pn)
    if norm < ZERO_PRIMER_TOL:
        ar = at = an = 0.0
    else:
        ar, at, an = -pr / norm, -pt / norm, -pn / norm

    accel = prop.accel
    gamma = _scalar_throttle(law, norm, prop.m0 / m)
    scale = float(thrust_scale(x, t, pc)) if pc.eclipse_active else 1.0
    thrust = accel * scale * gamma
    ur, ut, un = thrust * ar, thrust * at, thrust * an
    if pc.j2_enabled:
        j2 = j2_accel(x, None, pc)
        ur, ut, un = ur + float(j2[0]), ut + float(j2[1]), un + float(j2[2])

    s, w = fr.s, fr.w
    x_dot = np.array(
        (
            s * 2.0 * fr.p / w * ut,
            s * (fr.sn * ur + (fr.c + (fr.c + fr.f) / w) * ut - fr.g * fr.q / w * un),
            s * (-fr.c * ur + (fr.sn + (fr.sn + fr.g) / w) * ut + fr.f * fr.q / w * un),
            s * fr.s2 * fr.c / (2.0 * w) * un,
            s * fr.s2 * fr.sn / (2.0 * w) * un,
            fr.a_l + s * fr.q / w * un,
        )
    )

    grad = _kepler_gradient(fr, lam, ur, ut, un)
    if pc.j2_enabled:
        primer = np.array((pr, pt, pn))
        grad += _fd_gradient(lambda xs: j2_accel(xs, None, pc) @ primer, x)
    if pc.eclipse_active and gamma != 0.0:
        grad -= accel * gamma * norm * _fd_gradient(lambda xs: thrust_scale(xs, t, pc), x)

    # H 对油门的偏导乘以油门对状态的梯度；∇‖Bᵀλ‖ = −∇ₓ[λᵀBα̂]
    if law.kind is LawKind.EO:
        slope = accel * (gamma - scale * norm)
        if slope != 0.0:
            grad -= slope * np.array(_bilinear_gradient(fr, lam, ar, at, an))
    elif law.kind is LawKind.SFO:
        width = 1.0 - law.smoothing_k
        z = (law.gamma_tr - norm) / width
        d_gamma = -0.5 * (prop.m0 / m) * (1.0 - math.tanh(z) ** 2) / width
        slope = accel * (law.gamma_tr - scale * norm) * d_gamma
        if slope != 0.0:
            grad += slope * np.array(_bilinear_gradient(fr, lam, ar, at, an))

    return x_dot, -grad, thrust


def costate_rate(x, lam, m, law: ControlLaw, prop: Propulsion, pc: PerturbationConfig, t: float = 0.0) -> np.ndarray:
    """λ̇ = −∂H/∂x（解析式）；costate_rate_fd 为同一约定下的差分版本。"""
    return extremal_rates(x, lam, m, law, prop, pc, t)[1]
