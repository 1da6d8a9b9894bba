import math
from dataclasses import replace

import numpy as np
import pytest

from lowthrust.control import ControlLaw
from lowthrust.dynamics import MeeState, Propulsion
from lowthrust.eo import solve_eo
from lowthrust.errors import ContinuationStalled, MaxIterations, Unbracketable, ValidationError
from lowthrust.fo import (
    ContinuationSchedule,
    continue_perturbations,
    on_time,
    solve_fo,
    threshold_for_profile,
)
from lowthrust.fo import solver as fo_solver
from lowthrust.numerics import RootReport, integrate, propagate

from .conftest import SYNTHETIC_LAM, SYNTHETIC_TOF

IDEAL = Propulsion(t_max=1.0, isp_g0=math.inf)


def _triangle(samples=101):
    times = np.linspace(0.0, 1.0, samples)
    return times, 1.0 - np.abs(2.0 * times - 1.0)


def test_on_time_interpolates_crossings():
    times, gamma = _triangle()
    assert on_time(times, gamma, 0.5) == pytest.approx(0.5, abs=1e-12)
    assert on_time(times, gamma, 0.25) == pytest.approx(0.75, abs=1e-12)
    assert on_time(times, gamma, 1.0) == 0.0
    assert on_time(times, np.full(101, 2.0), 1.0) == pytest.approx(1.0)


def test_threshold_for_triangular_profile():
    times, gamma = _triangle()
    # Γ_e 下的 Δv 为三角形面积 0.5
    threshold = threshold_for_profile(times, gamma, 0.5, IDEAL, tol=1e-9)
    assert threshold == pytest.approx(0.5, abs=1e-6)


def test_threshold_with_finite_exhaust_velocity():
    times, gamma = _triangle(401)
    prop = Propulsion(t_max=1.0, isp_g0=5.0)
    target = 5.0 * math.log(1.0 / (1.0 - 0.6 / 5.0))
    threshold = threshold_for_profile(times, gamma, target, prop, tol=1e-9)
    assert on_time(times, gamma, threshold) == pytest.approx(0.6, abs=1e-6)


def test_threshold_unreachable_target():
    times, gamma = _triangle()
    with pytest.raises(Unbracketable) as info:
        threshold_for_profile(times, gamma, 2.0, IDEAL)
    assert info.value.best == 0.0


def test_threshold_rejects_mismatched_profile():
    with pytest.raises(ValidationError):
        threshold_for_profile([0.0, 1.0], [0.5], 0.1, IDEAL)


def test_schedule_build():
    schedule = ContinuationSchedule.build(5, 0.99, 0.1)
    np.testing.assert_allclose(schedule.k_values, np.linspace(0.0, 0.99, 5))
    assert schedule.k_max == pytest.approx(0.99)
    assert len(schedule.eps_values) == 10
    assert schedule.eps_values[0] == pytest.approx(0.1)
    assert schedule.eps_values[-1] == 1.0

    coarse = ContinuationSchedule.build(1, 0.5, 0.3)
    assert coarse.k_values == (0.0,)
    assert coarse.eps_values == pytest.approx((0.3, 0.6, 0.9, 1.0))


def test_schedule_validation():
    with pytest.raises(ValidationError):
        ContinuationSchedule((0.0, 0.5, 0.5), (1.0,))
    with pytest.raises(ValidationError):
        ContinuationSchedule((0.0, 1.0), (1.0,))
    with pytest.raises(ValidationError):
        ContinuationSchedule((0.0,), (0.5, 1.2))
    with pytest.raises(ValidationError):
        ContinuationSchedule.build(0)


def test_zero_effort_fuel_optimal(coast_mission, fast_settings):
    solution = solve_fo(coast_mission, settings=fast_settings)
    assert solution.fuel_mass == 0.0
    np.testing.assert_array_equal(solution.lam0.as_array(), 0.0)
    assert [step.stage for step in solution.continuation_log] == ["eo"]
    np.testing.assert_array_equal(solution.trajectory.throttle, 0.0)


def test_eclipse_continuation_keeps_coast_solution(coast_mission, fast_settings):
    mission = coast_mission.with_perturbations(sun_direction_override=(0.0, 0.0, 1.0))
    fo = solve_fo(mission, settings=fast_settings)
    result = continue_perturbations(mission, fo, deps=0.25, settings=fast_settings)
    stages = [step.stage for step in result.continuation_log]
    assert stages == ["eo", "eclipse", "eclipse", "eclipse", "eclipse"]
    assert [step.value for step in result.continuation_log[1:]] == pytest.approx([0.25, 0.5, 0.75, 1.0])
    np.testing.assert_array_equal(result.lam0.as_array(), 0.0)
    assert result.fuel_mass == 0.0
    assert result.gamma_tr == fo.gamma_tr


def test_pinned_gamma_tr_on_zero_effort(coast_mission, fast_settings):
    solution = solve_fo(coast_mission, settings=fast_settings, pin_gamma_tr=0.3)
    assert solution.gamma_tr == 0.3


def test_continuation_schedule_from_settings(fast_settings):
    schedule = ContinuationSchedule.from_settings(replace(fast_settings, k_steps=3, k_max=0.9, deps=0.5))
    np.testing.assert_allclose(schedule.k_values, [0.0, 0.45, 0.9])
    assert schedule.eps_values == (0.5, 1.0)


@pytest.fixture(scope="module")
def bang_bang_mission(synthetic_mission):
    """以已知 λ0 正向积分 bang-bang 动力学得到终端状态；Γ_TR 取能量最优油门剖面的分位数。"""
    mission = synthetic_mission
    y0 = np.concatenate((mission.x0.as_array(), SYNTHETIC_LAM, [0.0]))
    eo_profile = propagate(y0, ControlLaw.energy(), 0.0, SYNTHETIC_TOF, mission.prop, mission.pc, 1e-12, 200)
    for quantile in (0.5, 0.3, 0.7, 0.1, 0.9):
        gamma_tr = float(np.quantile(eo_profile.throttle, quantile))
        law = ControlLaw.fuel(gamma_tr)
        trajectory = propagate(y0, law, 0.0, SYNTHETIC_TOF, mission.prop, mission.pc, 1e-12, 200)
        if np.any(trajectory.throttle > 0.0) and np.any(trajectory.throttle == 0.0):
            break
    else:
        pytest.fail("能量最优剖面上找不到同时含推力弧与滑行弧的 Γ_TR")
    y1 = integrate(y0, law, 0.0, SYNTHETIC_TOF, mission.prop, mission.pc, 1e-12)
    return replace(mission, x1=MeeState.from_array(y1[:6])), gamma_tr, float(y1[12])


def test_bang_bang_shooting_recovers_known_costates(bang_bang_mission, fast_settings):
    mission, gamma_tr, dv = bang_bang_mission
    guess = SYNTHETIC_LAM + 1e-4 * np.array([1.0, -1.0, 1.0, -1.0, 1.0, -1.0])
    report, dv_found = fo_solver.shoot_fixed_time(mission, ControlLaw.fuel(gamma_tr), mission.pc, guess, fast_settings)
    assert report.converged
    assert report.residual_norm <= fast_settings.root_tol
    np.testing.assert_allclose(report.solution, SYNTHETIC_LAM, atol=1e-5)
    assert dv_found == pytest.approx(dv, rel=1e-6)


@pytest.fixture(scope="module")
def synthetic_eo(synthetic_mission, fast_settings):
    return solve_eo(synthetic_mission, SYNTHETIC_LAM, fast_settings)


def _fake_shooting(monkeypatch, fo_failures):
    """替换打靶：平滑步原样返回初值，bang-bang 步前 fo_failures 次失败。"""
    calls = {"fo": 0}

    def fake_shoot(mission, law, pc, guess, settings):
        if law.kind.value == "FO":
            calls["fo"] += 1
            if calls["fo"] <= fo_failures:
                raise MaxIterations("bang-bang 未收敛", RootReport(np.asarray(guess), 1.0, 3, 3, False, 1.0, [1.0]))
        report = RootReport(np.asarray(guess, dtype=float), 1e-12, 1, 1, True, 1e-3, [1e-3, 1e-12])
        return report, 0.01

    monkeypatch.setattr(fo_solver, "shoot_fixed_time", fake_shoot)
    return calls


def test_failed_bang_bang_step_adds_smoothing_refinement(monkeypatch, synthetic_mission, synthetic_eo, fast_settings):
    calls = _fake_shooting(monkeypatch, fo_failures=1)
    solution = solve_fo(synthetic_mission, settings=fast_settings, pin_gamma_tr=0.05, eo=synthetic_eo)
    stages = [step.stage for step in solution.continuation_log]
    assert stages == ["eo"] + ["sfo"] * 6 + ["fo"]
    assert solution.continuation_log[-2].value == pytest.approx(0.999)
    assert calls["fo"] == 2


def test_bang_bang_step_stalls_after_refinements(monkeypatch, synthetic_mission, synthetic_eo, fast_settings):
    calls = _fake_shooting(monkeypatch, fo_failures=100)
    with pytest.raises(ContinuationStalled) as info:
        solve_fo(synthetic_mission, settings=fast_settings, pin_gamma_tr=0.05, eo=synthetic_eo)
    assert info.value.parameter == "k"
    assert info.value.value == 1.0
    assert info.value.report is not None
    assert calls["fo"] == 1 + fo_solver.FO_REFINEMENTS


def test_schedule_refinements_approach_one():
    schedule = ContinuationSchedule.build(5, 0.99, 0.1)
    assert schedule.refinements() == pytest.approx((0.999, 0.9999, 0.99999))
    assert schedule.refinements(1) == pytest.approx((0.999,))
