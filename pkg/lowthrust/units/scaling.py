from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING

from lowthrust import constants
from lowthrust.dynamics.models import MeeState, PerturbationConfig, Propulsion
from lowthrust.errors import ValidationError

if TYPE_CHECKING:
    from lowthrust.config import MissionConfig


@dataclass(frozen=True)
class UnitSystem:
    length_unit: float  # km / L_u
    time_unit: float  # s / T_u
    mass_unit: float  # kg / M_u
    mu_canonical: float

    def __post_init__(self) -> None:
        for name in ("length_unit", "time_unit", "mass_unit", "mu_canonical"):
            if not getattr(self, name) > 0:
                raise ValidationError(name, "单位尺度必须为正")

    @classmethod
    def heliocentric(cls, m0_kg: float) -> "UnitSystem":
        return cls._build(constants.AU_KM, constants.YEAR_S, m0_kg, constants.MU_SUN)

    @classmethod
    def geocentric(cls, m0_kg: float) -> "UnitSystem":
        return cls._build(constants.EARTH_UNIT_KM, constants.DAY_S, m0_kg, constants.MU_EARTH)

    @classmethod
    def for_regime(cls, regime: str, m0_kg: float) -> "UnitSystem":
        if regime == constants.REGIME_GEOCENTRIC:
            return cls.geocentric(m0_kg)
        return cls.heliocentric(m0_kg)

    @classmethod
    def _build(cls, length_km: float, time_s: float, mass_kg: float, mu_km3_s2: float) -> "UnitSystem":
        return cls(
            length_unit=length_km,
            time_unit=time_s,
            mass_unit=mass_kg,
            mu_canonical=mu_km3_s2 * time_s**2 / length_km**3,
        )

    def force(self, newtons: float) -> float:
        # N = kg·m/s²；/1000 换成 km
        return newtons * self.time_unit**2 / (self.mass_unit * self.length_unit * 1000.0)

    def velocity(self, m_per_s: float) -> float:
        return m_per_s * 1e-3 * self.time_unit / self.length_unit

    def velocity_to_si(self, value: float) -> float:
        return value * self.length_unit / self.time_unit * 1e3

    def length(self, km: float) -> float:
        return km / self.length_unit

    def days_to_time(self, days: float) -> float:
        return days * constants.DAY_S / self.time_unit

    def time_to_days(self, value: float) -> float:
        return value * self.time_unit / constants.DAY_S

    def mass_to_kg(self, value: float) -> float:
        return value * self.mass_unit


@dataclass(frozen=True)
class CanonicalMission:
    units: UnitSystem
    x0: MeeState
    x1: MeeState
    tof: float
    tof_upper: float
    prop: Propulsion
    pc: PerturbationConfig

    def with_perturbations(self, **changes) -> "CanonicalMission":
        return replace(self, pc=replace(self.pc, **changes))

    def with_tof(self, tof: float) -> "CanonicalMission":
        return replace(self, tof=tof)

    def fuel_kg(self, dv: float) -> float:
        """由标准单位 Δv 计算燃料消耗 (kg)。"""
        ratio = 0.0 if math.isinf(self.prop.isp_g0) else dv / self.prop.isp_g0
        return self.units.mass_unit * self.prop.m0 * (1.0 - math.exp(-ratio))


def _scale_state(values, units: UnitSystem, state_units: str, revolutions: int = 0) -> MeeState:
    p, f, g, h, k, L = (float(v) for v in values)
    if state_units == "km":
        p = units.length(p)
    return MeeState(p, f, g, h, k, L + 2.0 * math.pi * revolutions)


def canonicalize(config: "MissionConfig") -> "MissionConfig":
    """
    把任务配置换算成标准单位（L_u、T_u、M_u = m0）。

    已经换算过的配置原样返回。
    """
    if config.scaled is not None:
        return config

    units = UnitSystem.for_regime(config.regime, config.m0_kg)
    prop = Propulsion(
        t_max=units.force(config.t_max_n),
        isp_g0=units.velocity(config.isp_s * constants.G0),
        m0=config.m0_kg / units.mass_unit,
    )
    solver = config.solver
    pc = PerturbationConfig(
        mu=units.mu_canonical,
        j2_enabled=config.j2,
        r_earth=units.length(constants.R_EARTH_KM),
        eclipse_enabled=config.eclipse,
        eclipse_scale=1.0,
        c_t=solver.eclipse_ct,
        c_s=solver.eclipse_cs,
        epoch=config.epoch,
        time_unit=units.time_unit,
    )
    scaled = CanonicalMission(
        units=units,
        x0=_scale_state(config.x0, units, config.state_units),
        x1=_scale_state(config.x1, units, config.state_units, config.x1_revolutions),
        tof=units.days_to_time(config.tof_days),
        tof_upper=units.days_to_time(config.tof_upper_days or config.tof_days),
        prop=prop,
        pc=pc,
    )
    return replace(config, scaled=scaled)
