"""Opinion averaging dynamics, consensus statistics, and the variance optimum.

Agents hold scalar opinions that evolve by weighted averaging toward their
in-neighbors, each at its own positive susceptibility rate z_i.  Starting
from noisy observations of a common ground truth, the opinions reach a
consensus whose value is a weighted mean of the initial ones; this module
computes those weights, the consensus variance, and the susceptibility
profiles that minimize it, with a seeded Monte Carlo estimator as an
independent statistical check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import CentralityVector, WeightedDigraph, centrality, is_strongly_connected
from .ode import IntegratorOptions, Trajectory, integrate_until

GAUSSIAN = "gaussian"
UNIFORM = "uniform"


class DimensionMismatchError(ValueError):
    """Vector and graph dimensions disagree."""


class NonPositiveInputError(ValueError):
    """An input that must be strictly positive is not."""


def _positive_vector(x, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D vector")
    if not np.all(v > 0):
        raise NonPositiveInputError(f"{name} must be strictly positive elementwise")
    return v


@dataclass(frozen=True)
class SusceptibilityProfile:
    """Strictly positive per-agent openness parameters."""

    z: np.ndarray

    def __post_init__(self):
        z = np.array(self.z, dtype=np.float64)
        if z.ndim != 1 or z.size == 0:
            raise ValueError("susceptibility profile must be a non-empty vector")
        if not np.all(z > 0):
            raise NonPositiveInputError("susceptibilities must be strictly positive")
        z.setflags(write=False)
        object.__setattr__(self, "z", z)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.z, dtype=dtype)

    def __len__(self) -> int:
        return self.z.size

    def __getitem__(self, idx):
        return self.z[idx]


@dataclass(frozen=True)
class NoiseModel:
    """Ground truth plus independent zero-mean observation noise per agent.

    ``sigma2`` holds the per-agent noise variances.  ``distribution`` selects
    the sampling family for Monte Carlo runs; the consensus variance depends
    only on second moments, so gaussian and (variance-matched) uniform noise
    must give statistically identical results.
    """

    theta: float
    sigma2: np.ndarray
    distribution: str = GAUSSIAN

    def __post_init__(self):
        sigma2 = _positive_vector(self.sigma2, "sigma2")
        sigma2.setflags(write=False)
        object.__setattr__(self, "sigma2", sigma2)
        object.__setattr__(self, "theta", float(self.theta))
        if self.distribution not in (GAUSSIAN, UNIFORM):
            raise ValueError(f"unknown noise distribution {self.distribution!r}")

    @property
    def n(self) -> int:
        return self.sigma2.size


def abelson_rhs(x, z, g: WeightedDigraph) -> np.ndarray:
    """Averaging dynamics: dx_i/dt = z_i * sum_j W[i,j] (x_j - x_i).

    Equals ``-diag(z) @ laplacian(g) @ x``.
    """
    x = np.asarray(x, dtype=np.float64)
    z = _positive_vector(z, "z")
    if x.shape != (g.n,) or z.shape != (g.n,):
        raise DimensionMismatchError(
            f"state and susceptibility must have length {g.n}, got {x.shape} and {z.shape}"
        )
    w = g.weights
    return z * (w @ x - w.sum(axis=1) * x)


def consensus_weights(z, mu) -> np.ndarray:
    """Influence of each initial opinion on the consensus value.

    w_i = (mu_i / z_i) / sum_j (mu_j / z_j); positive, sums to 1.  Uniform
    susceptibility gives back the centrality itself.
    """
    z = _positive_vector(z, "z")
    mu = _positive_vector(np.asarray(mu), "mu")
    ratio = mu / z
    return ratio / ratio.sum()


def predict_consensus(x0, z, mu) -> float:
    """Closed-form consensus value: the w(z)-weighted mean of the initial opinions."""
    x0 = np.asarray(x0, dtype=np.float64)
    return float(consensus_weights(z, mu) @ x0)


def consensus_variance(z, mu, sigma2) -> float:
    """Variance of the consensus value under independent observation noise.

    v(z) = (sum_j mu_j/z_j)^-2 * sum_k mu_k^2 sigma_k^2 / z_k^2.  Invariant
    under rescaling z -> c z.
    """
    z = _positive_vector(z, "z")
    mu = _positive_vector(np.asarray(mu), "mu")
    sigma2 = _positive_vector(sigma2, "sigma2")
    ratio = mu / z
    return float((ratio**2 * sigma2).sum() / ratio.sum() ** 2)


def optimal_variance(sigma2) -> float:
    """Smallest achievable consensus variance: the inverse of summed precisions."""
    sigma2 = _positive_vector(sigma2, "sigma2")
    return float(1.0 / (1.0 / sigma2).sum())


def optimal_profile(mu, sigma2, alpha: float = 1.0) -> SusceptibilityProfile:
    """A variance-minimizing profile z_i = alpha * mu_i * sigma_i^2.

    The optimal set is the whole ray over alpha > 0; every member attains
    :func:`optimal_variance`.
    """
    if not alpha > 0:
        raise NonPositiveInputError(f"alpha must be positive, got {alpha!r}")
    mu = _positive_vector(np.asarray(mu), "mu")
    sigma2 = _positive_vector(sigma2, "sigma2")
    return SusceptibilityProfile(alpha * mu * sigma2)


def distance_to_optimal(z, mu, sigma2) -> float:
    """Relative spread of z_i / (mu_i sigma_i^2); zero iff z lies on the optimal ray.

    Invariant under z -> c z.
    """
    z = _positive_vector(z, "z")
    mu = _positive_vector(np.asarray(mu), "mu")
    sigma2 = _positive_vector(sigma2, "sigma2")
    r = z / (mu * sigma2)
    return float((r.max() - r.min()) / r.mean())


def simulate_opinions(x0, z, g: WeightedDigraph, opts: IntegratorOptions) -> Trajectory:
    """Integrate the averaging dynamics until consensus or t_end.

    Stops early once the opinion spread max(x) - min(x) falls below
    ``1e-9 * (1 + ||x0||_inf)``, a relative criterion robust to the scale of
    the ground truth.
    """
    if not is_strongly_connected(g):
        raise ValueError("opinion simulation requires a strongly connected graph")
    x0 = np.asarray(x0, dtype=np.float64)
    z = _positive_vector(z, "z")
    threshold = 1e-9 * (1.0 + np.max(np.abs(x0)))

    def rhs(t, x):
        return abelson_rhs(x, z, g)

    def at_consensus(t, x):
        return x.max() - x.min() < threshold

    return integrate_until(rhs, x0, opts, stop=at_consensus)


@dataclass(frozen=True)
class MonteCarloResult:
    """Sample statistics of the consensus value over independent noise draws.

    ``stderr`` is the standard error of the *variance* estimate, computed
    from the fourth central moment so it stays valid for non-gaussian noise.
    """

    mean: float
    variance: float
    stderr: float


def monte_carlo_variance(
    z, g: WeightedDigraph, noise: NoiseModel, trials: int, seed: int
) -> MonteCarloResult:
    """Estimate mean and variance of the consensus value by direct sampling.

    Each trial draws initial opinions theta + xi and evaluates the closed-form
    consensus value (no ODE solve per trial).  The generator is the
    counter-based Philox keyed by ``seed``, so results are reproducible and
    per-trial streams could be split off deterministically for parallel runs.
    """
    if trials < 2:
        raise ValueError("need at least 2 trials for an unbiased variance")
    z = _positive_vector(z, "z")
    if noise.n != g.n:
        raise DimensionMismatchError(f"noise has {noise.n} agents, graph has {g.n}")
    mu = centrality(g)
    w = consensus_weights(z, mu)
    rng = np.random.Generator(np.random.Philox(seed))
    if noise.distribution == GAUSSIAN:
        draws = rng.normal(0.0, np.sqrt(noise.sigma2), size=(trials, noise.n))
    else:
        half_width = np.sqrt(3.0 * noise.sigma2)  # matches the requested variance
        draws = rng.uniform(-half_width, half_width, size=(trials, noise.n))
    values = noise.theta + draws @ w
    mean = float(values.mean())
    centered = values - mean
    variance = float(centered @ centered / (trials - 1))
    m4 = float((centered**4).mean())
    var_of_var = (m4 - variance**2 * (trials - 3) / (trials - 1)) / trials
    return MonteCarloResult(mean, variance, float(np.sqrt(max(var_of_var, 0.0))))
