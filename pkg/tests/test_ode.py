import math

import numpy as np
import pytest

from wisdomdyn import (
    IntegratorOptions,
    MaxStepsExceededError,
    StepFailureError,
    Termination,
    Trajectory,
    integrate,
    integrate_until,
)


def decay(t, x):
    return -x


def test_exponential_decay_adaptive():
    opts = IntegratorOptions(method="rk45_adaptive", dt=0.1, rtol=1e-8, atol=1e-10, t_end=5.0)
    traj = integrate(decay, np.array([1.0]), opts)
    assert traj.terminated_by == Termination.T_END_REACHED
    assert abs(traj.final_state[0] - math.exp(-5.0)) < 1e-7


def test_zero_rhs_constant_trajectory():
    x0 = np.array([2.0, -3.5, 0.0])
    opts = IntegratorOptions(t_end=10.0)
    traj = integrate(lambda t, x: np.zeros_like(x), x0, opts)
    assert np.all(traj.states == x0)


def test_two_node_consensus_mean_preserved():
    # symmetric unit weights: x' = (x_j - x_i); average is conserved
    def rhs(t, x):
        return np.array([x[1] - x[0], x[0] - x[1]])

    opts = IntegratorOptions(rtol=1e-10, atol=1e-12, t_end=20.0)
    traj = integrate(rhs, np.array([0.0, 2.0]), opts)
    assert np.allclose(traj.final_state, [1.0, 1.0], atol=1e-8)
    # linear invariants survive Runge-Kutta steps up to roundoff
    assert np.all(np.abs(traj.states.sum(axis=1) - 2.0) < 1e-13)


def test_stop_true_at_start_keeps_only_initial_state():
    opts = IntegratorOptions(t_end=5.0)
    traj = integrate_until(decay, np.array([1.0]), opts, stop=lambda t, x: True)
    assert traj.terminated_by == Termination.PREDICATE_SATISFIED
    assert len(traj) == 1 and traj.times[0] == 0.0


def test_stop_at_threshold_crossing():
    opts = IntegratorOptions(rtol=1e-8, atol=1e-12, t_end=50.0)
    traj = integrate_until(
        decay, np.array([1.0]), opts, stop=lambda t, x: np.max(np.abs(x)) < 1e-3
    )
    assert traj.terminated_by == Termination.PREDICATE_SATISFIED
    # crossing is at t = ln(1000); detection lags by at most one accepted step
    assert math.log(1000.0) <= traj.final_time < math.log(1000.0) + 0.5


def test_stop_never_true_reaches_t_end():
    opts = IntegratorOptions(t_end=1.0)
    traj = integrate_until(decay, np.array([1.0]), opts, stop=lambda t, x: False)
    assert traj.terminated_by == Termination.T_END_REACHED
    assert traj.final_time == 1.0


@pytest.mark.parametrize("method", ["rk4_fixed", "rk45_adaptive"])
def test_deterministic_bit_identical(method):
    opts = IntegratorOptions(method=method, dt=0.01, t_end=3.0)
    a = integrate(decay, np.array([1.0, 2.0]), opts)
    b = integrate(decay, np.array([1.0, 2.0]), opts)
    assert np.array_equal(a.times, b.times)
    assert np.array_equal(a.states, b.states)


def test_rk4_fourth_order_convergence():
    def error_at(dt):
        opts = IntegratorOptions(method="rk4_fixed", dt=dt, t_end=5.0)
        traj = integrate(decay, np.array([1.0]), opts)
        return abs(traj.final_state[0] - math.exp(-5.0))

    ratio = error_at(0.1) / error_at(0.05)
    assert 12.0 <= ratio <= 20.0


def test_adaptive_error_within_tolerance_budget():
    for rtol, atol in [(1e-6, 1e-9), (1e-8, 1e-10), (1e-10, 1e-12)]:
        opts = IntegratorOptions(rtol=rtol, atol=atol, t_end=5.0)
        traj = integrate(decay, np.array([1.0]), opts)
        assert abs(traj.final_state[0] - math.exp(-5.0)) <= 100.0 * (atol + rtol)


def test_adaptive_step_failure_on_nan_rhs():
    opts = IntegratorOptions(dt=0.1, t_end=1.0)
    with pytest.raises(StepFailureError) as info:
        integrate(lambda t, x: np.array([math.nan]), np.array([1.0]), opts)
    partial = info.value.trajectory
    assert partial.terminated_by == Termination.STEP_FAILURE
    assert len(partial) == 1


def test_max_steps_budget():
    opts = IntegratorOptions(method="rk4_fixed", dt=0.001, t_end=10.0, max_steps=7)
    with pytest.raises(MaxStepsExceededError) as info:
        integrate(decay, np.array([1.0]), opts)
    assert info.value.trajectory.terminated_by == Termination.MAX_STEPS_EXCEEDED


def test_reject_guard_is_transparent_when_it_never_fires():
    opts = IntegratorOptions(dt=0.05, t_end=3.0)
    plain = integrate(decay, np.array([1.0]), opts)
    guarded = integrate(decay, np.array([1.0]), opts, reject=lambda x: bool(np.any(x < 0.0)))
    assert np.array_equal(plain.times, guarded.times)
    assert np.array_equal(plain.states, guarded.states)


def test_reject_guard_never_accepts_forbidden_states():
    # decay crosses 0.9 near t=0.105; the guard vetoes every proposal past it,
    # so the step underflows but no accepted state ever violates the guard
    opts = IntegratorOptions(dt=0.05, t_end=5.0)
    with pytest.raises(StepFailureError) as info:
        integrate(decay, np.array([1.0]), opts, reject=lambda x: bool(np.any(x < 0.9)))
    assert np.all(info.value.trajectory.states >= 0.9)


def test_fixed_step_reject_raises():
    opts = IntegratorOptions(method="rk4_fixed", dt=0.5, t_end=5.0)
    with pytest.raises(StepFailureError):
        integrate(decay, np.array([1.0]), opts, reject=lambda x: bool(np.any(x < 0.5)))


def test_record_every_subsamples_but_keeps_endpoints():
    opts = IntegratorOptions(method="rk4_fixed", dt=0.01, t_end=1.0, record_every=10)
    traj = integrate(decay, np.array([1.0]), opts)
    dense = integrate(decay, np.array([1.0]), IntegratorOptions(method="rk4_fixed", dt=0.01, t_end=1.0))
    assert len(traj) < len(dense)
    assert traj.times[0] == 0.0 and traj.final_time == 1.0
    assert np.all(np.diff(traj.times) > 0)


def test_trajectory_validation():
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0, 0.0]), np.zeros((2, 1)), Termination.T_END_REACHED)
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0, 1.0]), np.zeros((3, 1)), Termination.T_END_REACHED)


@pytest.mark.parametrize(
    "field,value",
    [("dt", 0.0), ("rtol", -1.0), ("atol", 0.0), ("t_end", 0.0),
     ("max_steps", 0), ("record_every", 0), ("method", "euler")],
)
def test_options_validation(field, value):
    with pytest.raises(ValueError):
        IntegratorOptions(**{field: value})
