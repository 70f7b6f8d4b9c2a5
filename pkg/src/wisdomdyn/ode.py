"""Explicit Runge-Kutta integration with fixed and adaptive stepping.

Two methods are provided: classic fixed-step RK4 and the adaptive
Dormand-Prince 5(4) embedded pair with a standard safety-factor step
controller.  Termination can additionally be driven by a user predicate
evaluated at accepted steps.  Both methods are deterministic: identical
inputs produce bit-identical trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

RK4_FIXED = "rk4_fixed"
RK45_ADAPTIVE = "rk45_adaptive"

# Dormand-Prince 5(4) tableau ("ode45").  The fifth-order solution is
# propagated; the embedded fourth-order difference gives the error estimate.
# The pair is FSAL: the last stage of an accepted step seeds the next one.
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_DP_E = _DP_B5 - _DP_B4


class Termination(str, Enum):
    """How an integration ended."""

    T_END_REACHED = "t_end_reached"
    PREDICATE_SATISFIED = "predicate_satisfied"
    MAX_STEPS_EXCEEDED = "max_steps_exceeded"
    STEP_FAILURE = "step_failure"


class IntegrationError(RuntimeError):
    """Base class for integration failures; carries the partial trajectory."""

    def __init__(self, message: str, trajectory: "Trajectory | None" = None):
        super().__init__(message)
        self.trajectory = trajectory


class StepFailureError(IntegrationError):
    """The adaptive step size underflowed, or a proposed state was rejected
    in fixed-step mode (which cannot adapt)."""


class MaxStepsExceededError(IntegrationError):
    """The step budget was exhausted before reaching t_end."""


@dataclass(frozen=True)
class IntegratorOptions:
    """Integration settings.

    ``dt`` is the fixed step for rk4_fixed and the initial step for
    rk45_adaptive.  The adaptive method accepts a step when the embedded
    error estimate satisfies ``||err||_inf <= atol + rtol * ||state||_inf``.
    ``record_every`` subsamples trajectory storage: every k-th accepted step
    is kept (the initial and final states always are).  ``max_steps`` bounds
    the total number of step attempts, including rejected ones.
    """

    method: str = RK45_ADAPTIVE
    dt: float = 0.01
    rtol: float = 1e-8
    atol: float = 1e-10
    t_end: float = 100.0
    max_steps: int = 1_000_000
    record_every: int = 1

    def __post_init__(self):
        if self.method not in (RK4_FIXED, RK45_ADAPTIVE):
            raise ValueError(f"unknown method {self.method!r}")
        for name in ("dt", "rtol", "atol", "t_end"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        if self.record_every < 1:
            raise ValueError("record_every must be at least 1")


@dataclass(frozen=True)
class Trajectory:
    """Recorded states of one integration run."""

    times: np.ndarray
    states: np.ndarray
    terminated_by: Termination

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64)
        states = np.asarray(self.states, dtype=np.float64)
        if times.ndim != 1 or times.size < 1:
            raise ValueError("times must be a non-empty 1-D array")
        if states.shape[0] != times.size:
            raise ValueError("states and times lengths differ")
        if times.size > 1 and not np.all(np.diff(times) > 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)

    @property
    def final_time(self) -> float:
        return float(self.times[-1])

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def __len__(self) -> int:
        return self.times.size


class _Recorder:
    """Collects accepted steps, honoring the record_every subsampling."""

    def __init__(self, t0: float, x0: np.ndarray, every: int):
        self.times = [t0]
        self.states = [np.array(x0)]
        self.every = every
        self.accepted = 0

    def on_accept(self, t: float, x: np.ndarray):
        self.accepted += 1
        if self.accepted % self.every == 0:
            self.times.append(t)
            self.states.append(np.array(x))

    def force(self, t: float, x: np.ndarray):
        """Record (t, x) even off the subsampling grid, e.g. the final state."""
        if t > self.times[-1]:
            self.times.append(t)
            self.states.append(np.array(x))

    def build(self, reason: Termination) -> Trajectory:
        return Trajectory(np.array(self.times), np.array(self.states), reason)


def _run_rk4(rhs, x0, opts, stop, reject):
    rec = _Recorder(0.0, x0, opts.record_every)
    if stop is not None and stop(0.0, x0):
        return rec.build(Termination.PREDICATE_SATISFIED)
    n_steps = max(1, math.ceil(opts.t_end / opts.dt))
    t, x = 0.0, np.array(x0)
    for step in range(1, n_steps + 1):
        if step > opts.max_steps:
            raise MaxStepsExceededError(
                f"step budget {opts.max_steps} exhausted at t={t:.6g}",
                rec.build(Termination.MAX_STEPS_EXCEEDED),
            )
        is_last = step == n_steps
        t_next = opts.t_end if is_last else step * opts.dt
        h = t_next - t
        k1 = rhs(t, x)
        k2 = rhs(t + h / 2, x + (h / 2) * k1)
        k3 = rhs(t + h / 2, x + (h / 2) * k2)
        k4 = rhs(t + h, x + h * k3)
        x_new = x + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        if reject is not None and reject(x_new):
            raise StepFailureError(
                f"proposed state rejected at t={t_next:.6g}; fixed stepping cannot adapt",
                rec.build(Termination.STEP_FAILURE),
            )
        t, x = t_next, x_new
        rec.on_accept(t, x)
        if stop is not None and stop(t, x):
            rec.force(t, x)
            return rec.build(Termination.PREDICATE_SATISFIED)
    rec.force(opts.t_end, x)
    return rec.build(Termination.T_END_REACHED)


def _run_dp54(rhs, x0, opts, stop, reject):
    rec = _Recorder(0.0, x0, opts.record_every)
    if stop is not None and stop(0.0, x0):
        return rec.build(Termination.PREDICATE_SATISFIED)
    t = 0.0
    x = np.array(x0)
    h = min(opts.dt, opts.t_end)
    k = np.empty((7,) + x.shape)
    k[0] = rhs(t, x)
    attempts = 0
    while t < opts.t_end:
        if h < opts.dt * 1e-12:
            raise StepFailureError(
                f"adaptive step underflowed to {h:.3e} at t={t:.6g}",
                rec.build(Termination.STEP_FAILURE),
            )
        attempts += 1
        if attempts > opts.max_steps:
            raise MaxStepsExceededError(
                f"step budget {opts.max_steps} exhausted at t={t:.6g}",
                rec.build(Termination.MAX_STEPS_EXCEEDED),
            )
        is_last = t + h >= opts.t_end
        h_step = opts.t_end - t if is_last else h
        for s in range(1, 6):
            k[s] = rhs(t + _DP_C[s] * h_step, x + h_step * (_DP_A[s] @ k[:s]))
        x_new = x + h_step * (_DP_A[6] @ k[:6])
        k[6] = rhs(t + h_step, x_new)
        err = np.max(np.abs(h_step * (_DP_E @ k)))
        tol = opts.atol + opts.rtol * np.max(np.abs(x))
        if math.isfinite(err) and err <= tol:
            if reject is not None and reject(x_new):
                # degenerate guard: back off hard instead of trusting the
                # error-based controller (the state left the admissible set)
                h = h_step * 0.5
                continue
            t = opts.t_end if is_last else t + h_step
            x = x_new
            k[0] = k[6]
            rec.on_accept(t, x)
            if stop is not None and stop(t, x):
                rec.force(t, x)
                return rec.build(Termination.PREDICATE_SATISFIED)
        if math.isfinite(err) and err > 0:
            factor = min(5.0, max(0.2, 0.9 * (tol / err) ** 0.2))
        elif err == 0.0:
            factor = 5.0
        else:
            factor = 0.2  # non-finite error estimate: shrink hard
        h = h_step * factor
    rec.force(opts.t_end, x)
    return rec.build(Termination.T_END_REACHED)


def integrate(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    x0,
    opts: IntegratorOptions,
    reject: Callable[[np.ndarray], bool] | None = None,
) -> Trajectory:
    """Integrate ``x' = rhs(t, x)`` from t=0 to ``opts.t_end``.

    ``reject``, if given, vetoes proposed states: the adaptive method retries
    with half the step, the fixed method raises StepFailureError.  Raises
    MaxStepsExceededError when the step budget runs out; both exceptions
    carry the partial trajectory computed so far.
    """
    return integrate_until(rhs, x0, opts, stop=None, reject=reject)


def integrate_until(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    x0,
    opts: IntegratorOptions,
    stop: Callable[[float, np.ndarray], bool] | None,
    reject: Callable[[np.ndarray], bool] | None = None,
) -> Trajectory:
    """Like :func:`integrate`, but stop at the first accepted step where
    ``stop(t, x)`` is true (checked at t=0 as well, before any stepping)."""
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.ndim != 1:
        raise ValueError("state must be a 1-D vector")
    if opts.method == RK4_FIXED:
        return _run_rk4(rhs, x0, opts, stop, reject)
    return _run_dp54(rhs, x0, opts, stop, reject)
