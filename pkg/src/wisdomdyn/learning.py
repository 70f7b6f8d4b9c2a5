"""Distributed learning of variance-minimizing susceptibility profiles.

Each agent follows the negative gradient of a local variance surrogate
built from its neighborhood in a second "information" graph.  Under the
coordinate change y_i = mu_i sigma_i^2 / z_i the flow becomes a nonlinear
averaging system whose state hull [min y, max y] contracts monotonically,
so trajectories stay positive, reach agreement in y, and the limiting z is
a variance-minimizing profile.  The hull contraction and agreement are
enforced here as runtime checks rather than assumed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import WeightedDigraph, has_self_loops, is_strongly_connected
from .ode import (
    RK45_ADAPTIVE,
    IntegratorOptions,
    StepFailureError,
    Termination,
    Trajectory,
    integrate_until,
)
from .opinion import (
    NonPositiveInputError,
    SusceptibilityProfile,
    _positive_vector,
    distance_to_optimal,
)

DEFAULT_SPREAD_TOL = 1e-8

Y_SPACE = "y_space"
Z_SPACE = "z_space"


class IsolatedAgentError(ValueError):
    """An agent with no in-edges in the learning graph has no utility."""


class HullViolationError(RuntimeError):
    """A trajectory left the forward-invariant hull of initial y values.

    Analytically impossible; signals an integration failure (step size too
    coarse or a broken problem definition).
    """


@dataclass(frozen=True)
class LearningProblem:
    """Learning graph plus the opinion-side parameters it adapts to.

    The learning graph must be strongly connected with a self-loop at every
    node: without the self-loop an agent's own susceptibility drops out of
    its utility and its gradient freezes.  ``mu`` is the centrality of the
    *social* graph, not of the learning graph.
    """

    g_bar: WeightedDigraph
    mu: np.ndarray
    sigma2: np.ndarray

    def __post_init__(self):
        mu = _positive_vector(np.asarray(self.mu), "mu")
        sigma2 = _positive_vector(self.sigma2, "sigma2")
        if mu.size != self.g_bar.n or sigma2.size != self.g_bar.n:
            raise ValueError(
                f"mu and sigma2 must have length {self.g_bar.n}, "
                f"got {mu.size} and {sigma2.size}"
            )
        if not is_strongly_connected(self.g_bar):
            raise ValueError("learning graph must be strongly connected")
        if not has_self_loops(self.g_bar):
            raise ValueError("learning graph must have a self-loop at every node")
        mu.setflags(write=False)
        sigma2.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma2", sigma2)

    @property
    def n(self) -> int:
        return self.g_bar.n


@dataclass(frozen=True)
class YState:
    """Strictly positive transformed state y_i = mu_i sigma_i^2 / z_i."""

    y: np.ndarray

    def __post_init__(self):
        y = np.array(self.y, dtype=np.float64)
        if y.ndim != 1 or y.size == 0:
            raise ValueError("y state must be a non-empty vector")
        if not np.all(y > 0):
            raise NonPositiveInputError("y state must be strictly positive")
        y.setflags(write=False)
        object.__setattr__(self, "y", y)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.y, dtype=dtype)

    def __len__(self) -> int:
        return self.y.size

    def __getitem__(self, idx):
        return self.y[idx]


def to_y(z, mu, sigma2) -> YState:
    """Map susceptibilities to the averaging coordinates, y_i = mu_i sigma_i^2 / z_i."""
    z = _positive_vector(z, "z")
    mu = _positive_vector(np.asarray(mu), "mu")
    sigma2 = _positive_vector(sigma2, "sigma2")
    return YState(mu * sigma2 / z)


def from_y(y, mu, sigma2) -> SusceptibilityProfile:
    """Inverse of :func:`to_y`: z_i = mu_i sigma_i^2 / y_i."""
    y = _positive_vector(np.asarray(y), "y")
    mu = _positive_vector(np.asarray(mu), "mu")
    sigma2 = _positive_vector(sigma2, "sigma2")
    return SusceptibilityProfile(mu * sigma2 / y)


def _utility_terms(z: np.ndarray, p: LearningProblem):
    """Neighborhood sums A_i = sum_k Wbar[i,k] mu_k^2 s_k^2 / z_k^2 and
    B_i = sum_j Wbar[i,j] mu_j / z_j."""
    w = p.g_bar.weights
    a = w @ (p.mu**2 * p.sigma2 / z**2)
    b = w @ (p.mu / z)
    return a, b


def local_utility(i: int, z, p: LearningProblem) -> float:
    """Agent i's neighborhood analogue of the consensus variance.

    u_i(z) = (sum_j Wbar[i,j] mu_j/z_j)^-2 * sum_k Wbar[i,k] mu_k^2 s_k^2/z_k^2.
    On a complete unit-weight learning graph this reduces to the global
    consensus variance for every agent.
    """
    z = _positive_vector(z, "z")
    row = p.g_bar.weights[i]
    if not row.any():
        raise IsolatedAgentError(f"agent {i} has no in-edges in the learning graph")
    a = row @ (p.mu**2 * p.sigma2 / z**2)
    b = row @ (p.mu / z)
    return float(a / b**2)


def utility_gradient(i: int, z, p: LearningProblem) -> float:
    """Closed-form partial derivative of u_i with respect to z_i.

    With A, B the neighborhood sums of :func:`local_utility`,
    dA/dz_i = -2 Wbar[i,i] mu_i^2 s_i^2 / z_i^3 and
    dB/dz_i = -Wbar[i,i] mu_i / z_i^2, so the quotient rule gives
    (B dA - 2 A dB) / B^3.  Vanishes identically when Wbar[i,i] = 0.
    """
    z = _positive_vector(z, "z")
    row = p.g_bar.weights[i]
    if not row.any():
        raise IsolatedAgentError(f"agent {i} has no in-edges in the learning graph")
    a = row @ (p.mu**2 * p.sigma2 / z**2)
    b = row @ (p.mu / z)
    w_ii = row[i]
    da = -2.0 * w_ii * p.mu[i] ** 2 * p.sigma2[i] / z[i] ** 3
    db = -w_ii * p.mu[i] / z[i] ** 2
    return float((b * da - 2.0 * a * db) / b**3)


def z_rhs(z, p: LearningProblem) -> np.ndarray:
    """Gradient-descent field dz_i/dt = -du_i/dz_i, vectorized over agents."""
    z = _positive_vector(z, "z")
    if z.size != p.n:
        raise ValueError(f"z must have length {p.n}, got {z.size}")
    a, b = _utility_terms(z, p)
    diag = np.diag(p.g_bar.weights)
    da = -2.0 * diag * p.mu**2 * p.sigma2 / z**3
    db = -diag * p.mu / z**2
    return -(b * da - 2.0 * a * db) / b**3


def coupling_matrix(y, p: LearningProblem) -> np.ndarray:
    """State-dependent averaging weights of the transformed dynamics.

    m[i,j] = 2 y_i^4 y_j Wbar[i,i] Wbar[i,j] / (mu_i^2 s_i^6 s_j^2)
             * (sum_k Wbar[i,k] y_k / s_k^2)^-3,
    positive exactly where Wbar[i,j] is, for every positive y.
    """
    y = _positive_vector(np.asarray(y), "y")
    if y.size != p.n:
        raise ValueError(f"y must have length {p.n}, got {y.size}")
    w = p.g_bar.weights
    b = w @ (y / p.sigma2)
    diag = np.diag(w)
    row_factor = 2.0 * y**4 * diag / (p.mu**2 * p.sigma2**3 * b**3)
    col_factor = y / p.sigma2
    return row_factor[:, None] * w * col_factor[None, :]


def y_rhs(y, p: LearningProblem) -> np.ndarray:
    """Transformed learning flow dy_i/dt = sum_j m[i,j](y) (y_j - y_i)."""
    y = _positive_vector(np.asarray(y), "y")
    if y.size != p.n:
        raise ValueError(f"y must have length {p.n}, got {y.size}")
    w = p.g_bar.weights
    q = y / p.sigma2
    b = w @ q
    prefactor = 2.0 * y**4 * np.diag(w) / (p.mu**2 * p.sigma2**3 * b**3)
    return prefactor * (w @ (q * y) - b * y)


def relative_spread(v: np.ndarray) -> float:
    """(max - min) / mean, the dimensionless agreement measure used throughout."""
    return float((v.max() - v.min()) / v.mean())


def equilibrium_check(z, p: LearningProblem, tol: float = 1e-10) -> bool:
    """True iff the gradient field nearly vanishes: ||z_rhs||_inf < tol.

    For tight tolerances this agrees with membership of the optimal ray
    (small :func:`distance_to_optimal`): the positive equilibria are exactly
    the variance minimizers.
    """
    return bool(np.max(np.abs(z_rhs(z, p))) < tol)


@dataclass(frozen=True)
class LearnDiagnostics:
    """Convergence evidence collected along a learning run.

    ``y_min``/``y_max`` track the state hull at each recorded step;
    ``hull_low``/``hull_high`` are the initial bounds that must confine the
    whole trajectory.  ``zeta`` is the common limit of the y coordinates.
    """

    y_min: np.ndarray
    y_max: np.ndarray
    hull_low: float
    hull_high: float
    zeta: float
    y_spread: float
    distance_to_optimal: float
    terminated_by: Termination


@dataclass(frozen=True)
class LearnResult:
    """Outcome of a learning run: z-space trajectory, limit profile, diagnostics."""

    trajectory: Trajectory
    z_limit: SusceptibilityProfile
    diagnostics: LearnDiagnostics
    problem: LearningProblem

    @property
    def y_states(self) -> np.ndarray:
        """Recorded trajectory transformed to the averaging coordinates."""
        return self.problem.mu * self.problem.sigma2 / self.trajectory.states


def _default_options() -> IntegratorOptions:
    return IntegratorOptions(method=RK45_ADAPTIVE, dt=0.01, rtol=1e-8, atol=1e-10,
                             t_end=10_000.0)


def learn(
    z0,
    p: LearningProblem,
    opts: IntegratorOptions | None = None,
    coords: str = Y_SPACE,
    spread_tol: float = DEFAULT_SPREAD_TOL,
) -> LearnResult:
    """Run the distributed learning flow from a positive initial profile.

    Integrates in the transformed y coordinates by default (their hull gives
    an a priori bound and a cheap sanity guard); ``coords="z_space"``
    integrates the raw gradient flow instead.  Stops once the relative
    y-spread falls below ``spread_tol`` or at ``opts.t_end``.

    The flow is homogeneous of degree 3 in y, so its timescale grows like
    1/y^2: starts with very large z (small y) converge slowly and need
    ``opts.t_end`` scaled up accordingly.  The default budget comfortably
    covers z0 within a couple of orders of magnitude of mu * sigma2.

    Raises HullViolationError if any recorded y leaves the initial hull
    beyond a relative slack of 1e-9, or if positivity is lost; for the
    adaptive method, steps proposing a non-positive state are rejected and
    retried at half the size before that can happen.
    """
    if coords not in (Y_SPACE, Z_SPACE):
        raise ValueError(f"coords must be {Y_SPACE!r} or {Z_SPACE!r}, got {coords!r}")
    z0 = _positive_vector(z0, "z0")
    if z0.size != p.n:
        raise ValueError(f"z0 must have length {p.n}, got {z0.size}")
    if opts is None:
        opts = _default_options()

    scale = p.mu * p.sigma2
    y0 = scale / z0
    hull_low, hull_high = float(y0.min()), float(y0.max())
    hull_tol = 1e-9 * hull_high
    w = p.g_bar.weights
    diag = np.diag(w)

    def not_positive(state):
        return bool(np.any(state <= 0))

    if coords == Y_SPACE:

        def rhs(t, y):
            # stage states may briefly leave the positive orthant; the
            # resulting inf/nan error estimates get the step rejected
            with np.errstate(all="ignore"):
                q = y / p.sigma2
                b = w @ q
                pref = 2.0 * y**4 * diag / (p.mu**2 * p.sigma2**3 * b**3)
                return pref * (w @ (q * y) - b * y)

        def stop(t, y):
            return relative_spread(y) < spread_tol

        x_start = y0
    else:

        def rhs(t, z):
            with np.errstate(all="ignore"):
                a = w @ (p.mu**2 * p.sigma2 / z**2)
                b = w @ (p.mu / z)
                da = -2.0 * diag * p.mu**2 * p.sigma2 / z**3
                db = -diag * p.mu / z**2
                return -(b * da - 2.0 * a * db) / b**3

        def stop(t, z):
            return relative_spread(scale / z) < spread_tol

        x_start = z0

    try:
        raw = integrate_until(rhs, x_start, opts, stop=stop, reject=not_positive)
    except StepFailureError as err:
        if opts.method != RK45_ADAPTIVE:
            raise HullViolationError(
                "fixed-step integration proposed a non-positive state"
            ) from err
        raise

    if coords == Y_SPACE:
        y_states = raw.states
        z_states = scale / y_states
    else:
        z_states = raw.states
        y_states = scale / z_states

    if not np.all(np.isfinite(y_states)) or np.any(y_states <= 0):
        raise HullViolationError("trajectory lost positivity of the y coordinates")
    if np.any(y_states < hull_low - hull_tol) or np.any(y_states > hull_high + hull_tol):
        raise HullViolationError(
            "trajectory left the forward-invariant hull "
            f"[{hull_low:.6g}, {hull_high:.6g}] beyond tolerance"
        )

    y_final = y_states[-1]
    diagnostics = LearnDiagnostics(
        y_min=y_states.min(axis=1),
        y_max=y_states.max(axis=1),
        hull_low=hull_low,
        hull_high=hull_high,
        zeta=float(y_final.mean()),
        y_spread=relative_spread(y_final),
        distance_to_optimal=distance_to_optimal(z_states[-1], p.mu, p.sigma2),
        terminated_by=raw.terminated_by,
    )
    trajectory = Trajectory(raw.times, z_states, raw.terminated_by)
    return LearnResult(trajectory, SusceptibilityProfile(z_states[-1]), diagnostics, p)
