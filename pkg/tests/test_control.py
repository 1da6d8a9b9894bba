import numpy as np
import pytest

from lowthrust.control import (
    ControlLaw,
    costate_rate,
    costate_rate_fd,
    directions,
    extremal_rates,
    hamiltonian,
    hamiltonian_gradient,
    optimal_direction,
    switching_function,
    throttle,
)
from lowthrust.dynamics import ControlInput, PerturbationConfig, Propulsion, gve_matrices, state_rate
from lowthrust.errors import ValidationError, ZeroPrimer

from .conftest import random_states

PROP = Propulsion(t_max=3.99, isp_g0=6.2)
PC = PerturbationConfig(mu=39.47)
PC_J2 = PerturbationConfig(mu=1.0, j2_enabled=True, j2=1e-3, r_earth=0.5)
PC_ECLIPSE = PerturbationConfig(
    mu=1.0, eclipse_enabled=True, eclipse_scale=0.5, c_t=5.0, sun_direction_override=(1.0, 0.0, 0.0)
)
PC_BOTH = PerturbationConfig(
    mu=1.0,
    j2_enabled=True,
    j2=1e-3,
    r_earth=0.5,
    eclipse_enabled=True,
    eclipse_scale=1.0,
    c_t=5.0,
    sun_direction_override=(0.6, 0.8, 0.0),
)
LAWS = [ControlLaw.energy(), ControlLaw.smoothed(0.03, 0.5), ControlLaw.fuel(0.03), ControlLaw.time(1.0)]


def _numeric_rate(x, lam, m, law, prop, pc, h=1e-6):
    rate = np.empty(6)
    for i in range(6):
        step = h * max(1.0, abs(x[i]))
        up = x.copy()
        down = x.copy()
        up[i] += step
        down[i] -= step
        rate[i] = -(hamiltonian(up, lam, m, law, prop, pc) - hamiltonian(down, lam, m, law, prop, pc)) / (2 * step)
    return rate


def test_optimal_direction_opposes_primer():
    np.testing.assert_allclose(optimal_direction([3.0, 0.0, 4.0]), [-0.6, 0.0, -0.8])
    with pytest.raises(ZeroPrimer):
        optimal_direction([0.0, 0.0, 0.0])


def test_directions_zero_primer_rows_are_zero():
    result = directions(np.array([[0.0, 2.0, 0.0], [0.0, 0.0, 0.0]]))
    np.testing.assert_allclose(result, [[0.0, -1.0, 0.0], [0.0, 0.0, 0.0]])


def test_optimal_direction_minimizes_projection(rng):
    primer = np.array([0.3, -1.2, 0.5])
    best = primer @ optimal_direction(primer)
    candidates = rng.normal(size=(100, 3))
    candidates /= np.linalg.norm(candidates, axis=1, keepdims=True)
    assert np.all(candidates @ primer >= best - 1e-12)
    assert best == pytest.approx(-np.linalg.norm(primer))


def test_switching_function():
    assert switching_function([3.0, 0.0, 4.0], 6.0) == pytest.approx(1.0)
    np.testing.assert_allclose(switching_function(np.array([[3.0, 0.0, 4.0], [0.0, 1.0, 0.0]]), 2.0), [-3.0, 1.0])


def test_throttle_per_law():
    burn = np.array([3.0, 0.0, 4.0])
    assert throttle(ControlLaw.energy(), burn, 1.0, 1.0) == pytest.approx(5.0)
    assert throttle(ControlLaw.fuel(1.0), burn, 0.8, 1.0) == pytest.approx(1.25)
    assert throttle(ControlLaw.fuel(10.0), burn, 0.8, 1.0) == 0.0
    # ρ = 0 按滑行处理
    assert throttle(ControlLaw.fuel(5.0), burn, 1.0, 1.0) == 0.0
    assert throttle(ControlLaw.smoothed(5.0, 0.5), burn, 1.0, 1.0) == pytest.approx(0.5)
    assert throttle(ControlLaw.smoothed(6.0, 0.99), burn, 1.0, 1.0) == pytest.approx(0.0, abs=1e-8)
    assert throttle(ControlLaw.time(2.0), burn, 0.5, 1.0) == pytest.approx(2.0)


def test_smoothed_throttle_bounded(rng):
    primer = rng.normal(scale=0.5, size=(200, 3))
    for k in (0.0, 0.5, 0.9):
        gamma = throttle(ControlLaw.smoothed(0.6, k), primer, 0.7, 1.0)
        assert np.all(gamma >= 0.0)
        assert np.all(gamma <= 1.0 / 0.7 + 1e-15)


def test_hamiltonian_with_zero_costates():
    x = np.array([1.0, 0.01, -0.02, 0.0, 0.0, 0.3])
    zero = np.zeros(6)
    assert hamiltonian(x, zero, 1.0, ControlLaw.energy(), PROP, PC) == 0.0
    assert hamiltonian(x, zero, 1.0, ControlLaw.fuel(0.5), PROP, PC) == 0.0
    assert hamiltonian(x, zero, 1.0, ControlLaw.time(3.5), PROP, PC) == pytest.approx(3.5)


def test_energy_hamiltonian_closed_form():
    x = np.array([1.1, 0.02, 0.01, 0.05, -0.03, 1.0])
    lam = np.array([0.1, -0.2, 0.05, 0.01, 0.02, -0.03])
    A, B = gve_matrices(x, PC.mu)
    norm = np.linalg.norm(B.T @ lam)
    expected = lam @ A - 0.5 * PROP.accel * norm**2
    assert hamiltonian(x, lam, 1.0, ControlLaw.energy(), PROP, PC) == pytest.approx(expected, rel=1e-13)


@pytest.mark.parametrize(
    "law",
    [ControlLaw.energy(), ControlLaw.smoothed(0.03, 0.5), ControlLaw.fuel(0.03), ControlLaw.time(1.0)],
    ids=lambda law: law.kind.value,
)
def test_costate_rate_matches_numeric_gradient(rng, law):
    states = random_states(rng, 200)
    lams = rng.uniform(-0.1, 0.1, size=(200, 6))
    checked = 0
    for x, lam in zip(states, lams):
        _, B = gve_matrices(x, PC.mu)
        if law.kind.value == "FO" and abs(switching_function(B.T @ lam, law.gamma_tr)) < 1e-3:
            continue
        expected = _numeric_rate(x, lam, 0.9, law, PROP, PC)
        np.testing.assert_allclose(costate_rate(x, lam, 0.9, law, PROP, PC), expected, rtol=1e-5, atol=1e-7)
        checked += 1
    assert checked > 100


def test_costate_rate_with_j2(rng):
    law = ControlLaw.energy()
    for x in random_states(rng, 20):
        x[0] += 0.5
        lam = rng.uniform(-0.1, 0.1, 6)
        expected = _numeric_rate(x, lam, 1.0, law, PROP, PC_J2)
        np.testing.assert_allclose(costate_rate(x, lam, 1.0, law, PROP, PC_J2), expected, rtol=1e-5, atol=1e-7)


def test_fuel_law_with_zero_costates_has_zero_rate():
    x = np.array([1.0, 0.01, -0.02, 0.001, 0.002, 0.3])
    np.testing.assert_array_equal(costate_rate(x, np.zeros(6), 1.0, ControlLaw.fuel(0.5), PROP, PC), np.zeros(6))


@pytest.mark.parametrize("law", [ControlLaw.energy(), ControlLaw.time(1.0)], ids=["EO", "TO"])
def test_extremal_rates_consistent_with_state_rate(law):
    x = np.array([1.1, 0.02, 0.01, 0.05, -0.03, 1.0])
    lam = np.array([0.1, -0.2, 0.05, 0.01, 0.02, -0.03])
    m = 0.95
    x_dot, lam_dot, dv_rate = extremal_rates(x, lam, m, law, PROP, PC)

    _, B = gve_matrices(x, PC.mu)
    primer = B.T @ lam
    gamma = float(throttle(law, primer, m, PROP.m0))
    control = ControlInput(gamma, tuple(optimal_direction(primer)))
    np.testing.assert_allclose(x_dot, state_rate(x, m, control, PROP, PC), rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(lam_dot, costate_rate(x, lam, m, law, PROP, PC), rtol=1e-12, atol=1e-14)
    assert dv_rate == pytest.approx(PROP.accel * gamma)


def test_control_law_validation():
    with pytest.raises(ValidationError) as info:
        ControlLaw.fuel(-0.1)
    assert info.value.field == "gamma_tr"
    with pytest.raises(ValidationError):
        ControlLaw.smoothed(0.5, 1.0)


@pytest.mark.parametrize("pc", [PC_J2, PC_ECLIPSE, PC_BOTH], ids=["j2", "eclipse", "j2+eclipse"])
@pytest.mark.parametrize("law", LAWS, ids=lambda law: law.kind.value)
def test_analytic_costate_rate_matches_difference_quotient(rng, law, pc):
    prop = Propulsion(t_max=0.05, isp_g0=1.0)
    checked = 0
    for x, lam in zip(random_states(rng, 60), rng.uniform(-0.1, 0.1, size=(60, 6))):
        _, B = gve_matrices(x, pc.mu)
        if law.kind.value == "FO" and abs(switching_function(B.T @ lam, law.gamma_tr)) < 1e-3:
            continue
        expected = costate_rate_fd(x, lam, 0.9, law, prop, pc, 0.0)
        np.testing.assert_allclose(costate_rate(x, lam, 0.9, law, prop, pc, 0.0), expected, rtol=1e-6, atol=1e-8)
        checked += 1
    assert checked > 30


def test_hamiltonian_gradient_with_fixed_thrust(rng):
    u = np.array([0.01, -0.02, 0.005])
    for x, lam in zip(random_states(rng, 20), rng.uniform(-0.1, 0.1, size=(20, 6))):
        expected = np.empty(6)
        for i in range(6):
            step = 1e-6 * max(1.0, abs(x[i]))
            up = x.copy()
            down = x.copy()
            up[i] += step
            down[i] -= step
            A_up, B_up = gve_matrices(up, PC.mu)
            A_down, B_down = gve_matrices(down, PC.mu)
            expected[i] = (lam @ (A_up + B_up @ u) - lam @ (A_down + B_down @ u)) / (2 * step)
        np.testing.assert_allclose(hamiltonian_gradient(x, lam, u, PC.mu), expected, rtol=1e-6, atol=1e-7)
