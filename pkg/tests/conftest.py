from dataclasses import replace

import numpy as np
import pytest

from lowthrust.config import SolverSettings, load_mission
from lowthrust.control.laws import ControlLaw
from lowthrust.dynamics.models import MeeState, PerturbationConfig, Propulsion
from lowthrust.numerics.propagation import integrate
from lowthrust.units.scaling import canonicalize

FAST = SolverSettings(propagation_tol=1e-11, root_tol=1e-8, samples=200)
SYNTHETIC_LAM = np.array([0.02, -0.05, 0.01, 0.005, -0.02, -0.01])
SYNTHETIC_TOF = 0.4
COAST_TOF = 0.3


@pytest.fixture(scope="session")
def fast_settings() -> SolverSettings:
    return FAST


@pytest.fixture(scope="session")
def tempel1_config():
    return load_mission("tempel1")


@pytest.fixture(scope="session")
def tempel1(tempel1_config):
    return canonicalize(tempel1_config).scaled


@pytest.fixture(scope="session")
def coast_mission(tempel1):
    """x1 取 x0 的无控滑行像：零代价转移。"""
    y0 = np.concatenate((tempel1.x0.as_array(), np.zeros(6), [0.0]))
    y1 = integrate(y0, ControlLaw.energy(), 0.0, COAST_TOF, tempel1.prop, tempel1.pc, FAST.propagation_tol)
    return replace(tempel1, x1=MeeState.from_array(y1[:6]), tof=COAST_TOF, tof_upper=COAST_TOF)


@pytest.fixture(scope="session")
def synthetic_mission(tempel1):
    """由已知 λ0 正向积分能量最优动力学生成终端状态，能量最优解按构造已知。"""
    y0 = np.concatenate((tempel1.x0.as_array(), SYNTHETIC_LAM, [0.0]))
    y1 = integrate(y0, ControlLaw.energy(), 0.0, SYNTHETIC_TOF, tempel1.prop, tempel1.pc, 1e-12)
    return replace(tempel1, x1=MeeState.from_array(y1[:6]), tof=SYNTHETIC_TOF, tof_upper=SYNTHETIC_TOF)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def unit_pc() -> PerturbationConfig:
    return PerturbationConfig(mu=1.0)


@pytest.fixture(scope="session")
def unit_prop() -> Propulsion:
    return Propulsion(t_max=0.01, isp_g0=1.0)


def random_states(rng: np.random.Generator, n: int) -> np.ndarray:
    return np.column_stack(
        (
            rng.uniform(0.8, 1.5, n),
            rng.uniform(-0.1, 0.1, n),
            rng.uniform(-0.1, 0.1, n),
            rng.uniform(-0.3, 0.3, n),
            rng.uniform(-0.3, 0.3, n),
            rng.uniform(0.0, 2.0 * np.pi, n),
        )
    )
