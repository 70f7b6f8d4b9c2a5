"""Command-line entry point: run experiments from JSON configs.

Subcommands: centrality, simulate, learn, montecarlo, verify, and paper
(the bundled six-agent reference study end to end).  Every run writes its
artifacts plus a ``metadata.json`` echoing the config, seed, and tool
version so it can be replayed bit-identically.  Exit codes: 0 success,
1 verification failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .experiments import (
    FigureCheckError,
    build_reference_example,
    reproduce_y_consensus,
    reproduce_z_dissensus,
)
from .graph import (
    NotStronglyConnectedError,
    WeightedDigraph,
    ZeroRowError,
    centrality,
    from_edges,
    row_normalize,
)
from .learning import (
    DEFAULT_SPREAD_TOL,
    LearningProblem,
    Y_SPACE,
    Z_SPACE,
    learn,
    local_utility,
    utility_gradient,
    z_rhs,
)
from .ode import IntegratorOptions, Termination
from .opinion import (
    GAUSSIAN,
    UNIFORM,
    NoiseModel,
    consensus_variance,
    distance_to_optimal,
    monte_carlo_variance,
    optimal_profile,
    optimal_variance,
    predict_consensus,
    simulate_opinions,
)
from .output import write_csv, write_json

RAW = "raw"
ROW_STOCHASTIC = "row-stochastic"


class ConfigError(ValueError):
    """The experiment config is malformed or inconsistent."""


def _build_graph(spec, what: str) -> WeightedDigraph:
    if not isinstance(spec, dict) or "edges" not in spec:
        raise ConfigError(f"{what} must be an object with an 'edges' array")
    try:
        return from_edges(
            spec["edges"],
            n=spec.get("n"),
            undirected=bool(spec.get("undirected", False)),
            self_loops=float(spec.get("self_loops", 0.0)),
        )
    except ValueError as err:
        raise ConfigError(f"invalid {what}: {err}") from err


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    """Parsed and validated experiment description."""

    raw: dict
    social_graph: WeightedDigraph  # normalization already applied
    learning_graph: WeightedDigraph
    sigma2: np.ndarray
    theta: float
    normalization: str
    distribution: str
    z0_spec: object
    x0: np.ndarray | None
    trials: int
    seed: int
    coords: str
    integrator: IntegratorOptions
    output_dir: str

    @property
    def noise(self) -> NoiseModel:
        return NoiseModel(self.theta, self.sigma2, self.distribution)


def load_config(path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"config {path} is not valid JSON: {err}") from err
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    if "social_graph" not in raw:
        raise ConfigError("config is missing 'social_graph'")
    social = _build_graph(raw["social_graph"], "social_graph")

    normalization = raw.get("normalization", RAW)
    if normalization not in (RAW, ROW_STOCHASTIC):
        raise ConfigError(f"normalization must be 'raw' or 'row-stochastic', got {normalization!r}")
    if normalization == ROW_STOCHASTIC:
        try:
            social = row_normalize(social)
        except ZeroRowError as err:
            raise ConfigError(str(err)) from err

    if "learning_graph" in raw:
        learning_graph = _build_graph(raw["learning_graph"], "learning_graph")
    else:
        # default: the social topology, made self-aware with unit self-loops
        w = np.array(social.weights)
        np.fill_diagonal(w, 1.0)
        learning_graph = WeightedDigraph(w)
    if learning_graph.n != social.n:
        raise ConfigError(
            f"graphs disagree on size: social {social.n}, learning {learning_graph.n}"
        )

    n = social.n
    if "sigma2" not in raw:
        raise ConfigError("config is missing 'sigma2'")
    sigma2 = np.asarray(raw["sigma2"], dtype=float)
    if sigma2.shape != (n,):
        raise ConfigError(f"sigma2 must have length {n}")
    if not np.all(sigma2 > 0):
        raise ConfigError("sigma2 entries must be strictly positive")

    distribution = raw.get("distribution", GAUSSIAN)
    if distribution not in (GAUSSIAN, UNIFORM):
        raise ConfigError(f"distribution must be 'gaussian' or 'uniform', got {distribution!r}")

    z0_spec = raw.get("z0", {"seed": 0, "range": [0.5, 2.0]})
    if isinstance(z0_spec, list):
        z0 = np.asarray(z0_spec, dtype=float)
        if z0.shape != (n,):
            raise ConfigError(f"z0 must have length {n}")
        if not np.all(z0 > 0):
            raise ConfigError("z0 entries must be strictly positive")
    elif isinstance(z0_spec, dict):
        rng_range = z0_spec.get("range", [0.5, 2.0])
        if len(rng_range) != 2 or not (0 < rng_range[0] < rng_range[1]):
            raise ConfigError("z0.range must be [low, high] with 0 < low < high")
    else:
        raise ConfigError("z0 must be a vector or an object {'seed':..., 'range': [lo, hi]}")

    x0 = None
    if "x0" in raw:
        x0 = np.asarray(raw["x0"], dtype=float)
        if x0.shape != (n,):
            raise ConfigError(f"x0 must have length {n}")

    trials = int(raw.get("trials", 100_000))
    if trials < 2:
        raise ConfigError("trials must be at least 2")

    coords = raw.get("coords", Y_SPACE)
    if coords not in (Y_SPACE, Z_SPACE):
        raise ConfigError(f"coords must be '{Y_SPACE}' or '{Z_SPACE}', got {coords!r}")

    integrator_spec = raw.get("integrator", {})
    if not isinstance(integrator_spec, dict):
        raise ConfigError("integrator must be an object of integrator options")
    defaults = {"rtol": 1e-8, "atol": 1e-10, "t_end": 10_000.0}
    try:
        integrator = IntegratorOptions(**{**defaults, **integrator_spec})
    except (TypeError, ValueError) as err:
        raise ConfigError(f"invalid integrator options: {err}") from err

    try:
        theta = float(raw.get("theta", 0.0))
        seed = int(raw.get("seed", 0))
    except (TypeError, ValueError) as err:
        raise ConfigError(f"invalid scalar option: {err}") from err

    return ExperimentConfig(
        raw=raw,
        social_graph=social,
        learning_graph=learning_graph,
        sigma2=sigma2,
        theta=theta,
        normalization=normalization,
        distribution=distribution,
        z0_spec=z0_spec,
        x0=x0,
        trials=trials,
        seed=seed,
        coords=coords,
        integrator=integrator,
        output_dir=str(raw.get("output_dir", "out")),
    )


def resolve_z0(config: ExperimentConfig, seed: int) -> np.ndarray:
    """Explicit z0 vector, or a seeded log-uniform draw from the configured range."""
    if isinstance(config.z0_spec, list):
        return np.asarray(config.z0_spec, dtype=float)
    lo, hi = config.z0_spec.get("range", [0.5, 2.0])
    rng = np.random.Generator(np.random.Philox(seed))
    return np.exp(rng.uniform(np.log(lo), np.log(hi), size=config.social_graph.n))


def _effective_seed(config: ExperimentConfig, args_seed: int | None) -> int:
    if args_seed is not None:
        return args_seed
    if isinstance(config.z0_spec, dict) and "seed" in config.z0_spec:
        return int(config.z0_spec["seed"])
    return config.seed


def _thread_cap() -> int | None:
    value = os.environ.get("WISDOMDYN_THREADS")
    if value is None:
        return None
    try:
        cap = int(value)
    except ValueError as err:
        raise ConfigError(f"WISDOMDYN_THREADS must be an integer, got {value!r}") from err
    if cap < 1:
        raise ConfigError("WISDOMDYN_THREADS must be at least 1")
    return cap


def _write_metadata(out: Path, command: str, config_echo, seed: int, results: dict):
    write_json(out / "metadata.json", {
        "tool": "wisdomdyn",
        "version": __version__,
        "command": command,
        "seed": seed,
        "threads": _thread_cap(),
        "config": config_echo,
        "results": results,
    })


def _out_dir(config: ExperimentConfig | None, args) -> Path:
    if args.out is not None:
        out = Path(args.out)
    elif config is not None:
        out = Path(config.output_dir)
    else:
        out = Path("out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_centrality(config: ExperimentConfig, out: Path, seed: int) -> int:
    mu = centrality(config.social_graph)
    write_csv(
        out / "centrality.csv",
        ["node", "mu"],
        ((i + 1, float(m)) for i, m in enumerate(mu.mu)),
    )
    _write_metadata(out, "centrality", config.raw, seed, {"mu": mu.mu})
    print("node centrality:", " ".join(f"{m:.12g}" for m in mu.mu))
    return 0


def cmd_simulate(config: ExperimentConfig, out: Path, seed: int) -> int:
    z = resolve_z0(config, seed)
    if config.x0 is not None:
        x0 = config.x0
    else:
        rng = np.random.Generator(np.random.Philox(seed))
        if config.distribution == GAUSSIAN:
            xi = rng.normal(0.0, np.sqrt(config.sigma2))
        else:
            half = np.sqrt(3.0 * config.sigma2)
            xi = rng.uniform(-half, half)
        x0 = config.theta + xi
    trajectory = simulate_opinions(x0, z, config.social_graph, config.integrator)
    mu = centrality(config.social_graph)
    predicted = predict_consensus(x0, z, mu)
    n = config.social_graph.n
    write_csv(
        out / "opinions.csv",
        ["t"] + [f"x_{i + 1}" for i in range(n)],
        ([t] + list(row) for t, row in zip(trajectory.times, trajectory.states)),
    )
    results = {
        "x0": x0,
        "z": z,
        "predicted_consensus": predicted,
        "final_state": trajectory.final_state,
        "final_time": trajectory.final_time,
        "terminated_by": trajectory.terminated_by.value,
    }
    _write_metadata(out, "simulate", config.raw, seed, results)
    print(
        f"consensus {trajectory.final_state.mean():.12g} "
        f"(closed form {predicted:.12g}) at t={trajectory.final_time:.6g}"
    )
    return 0


def cmd_learn(config: ExperimentConfig, out: Path, seed: int) -> int:
    mu = centrality(config.social_graph)
    problem = LearningProblem(config.learning_graph, mu.mu, config.sigma2)
    z0 = resolve_z0(config, seed)
    result = learn(z0, problem, opts=config.integrator, coords=config.coords)
    d = result.diagnostics
    n = problem.n
    if config.coords == Y_SPACE:
        header = ["t"] + [f"y_{i + 1}" for i in range(n)]
        states = result.y_states
    else:
        header = ["t"] + [f"z_{i + 1}" for i in range(n)]
        states = result.trajectory.states
    write_csv(
        out / "learn.csv",
        header,
        ([t] + list(row) for t, row in zip(result.trajectory.times, states)),
    )
    results = {
        "z0": z0,
        "z_limit": result.z_limit.z,
        "zeta": d.zeta,
        "y_spread": d.y_spread,
        "hull": [d.hull_low, d.hull_high],
        "distance_to_optimal": d.distance_to_optimal,
        "terminated_by": d.terminated_by.value,
        "coords": config.coords,
        "integrator": dataclasses.asdict(config.integrator),
    }
    _write_metadata(out, "learn", config.raw, seed, results)
    print(
        f"learned z_limit = {np.array2string(result.z_limit.z, precision=8)} "
        f"(distance to optimal ray {d.distance_to_optimal:.3e})"
    )
    return 0


def cmd_montecarlo(config: ExperimentConfig, out: Path, seed: int) -> int:
    z = resolve_z0(config, seed)
    mc = monte_carlo_variance(z, config.social_graph, config.noise, config.trials, seed)
    mu = centrality(config.social_graph)
    analytic = consensus_variance(z, mu, config.sigma2)
    write_csv(
        out / "montecarlo.csv",
        ["trials", "seed", "mean", "variance", "stderr", "analytic_variance"],
        [(config.trials, seed, mc.mean, mc.variance, mc.stderr, analytic)],
    )
    _write_metadata(out, "montecarlo", config.raw, seed, {
        "z": z,
        "mean": mc.mean,
        "variance": mc.variance,
        "stderr": mc.stderr,
        "analytic_variance": analytic,
    })
    print(
        f"montecarlo variance {mc.variance:.8g} +- {mc.stderr:.2g} "
        f"(analytic {analytic:.8g})"
    )
    return 0


def _verify_checks(config: ExperimentConfig, seed: int) -> list[dict]:
    """The invariant suite behind ``wisdomdyn verify``: each entry is one check."""
    mu_vec = centrality(config.social_graph).mu
    sigma2 = config.sigma2
    problem = LearningProblem(config.learning_graph, mu_vec, sigma2)
    n = problem.n
    rng = np.random.Generator(np.random.Philox(seed))
    checks: list[dict] = []

    def add(name: str, passed: bool, detail: str):
        checks.append({"name": name, "passed": bool(passed), "detail": detail})

    # analytic gradient vs central finite differences
    worst = 0.0
    for _ in range(100):
        z = np.exp(rng.uniform(np.log(0.25), np.log(4.0), size=n))
        i = int(rng.integers(n))
        h = 1e-6 * z[i]
        zp, zm = z.copy(), z.copy()
        zp[i] += h
        zm[i] -= h
        fd = (local_utility(i, zp, problem) - local_utility(i, zm, problem)) / (2 * h)
        grad = utility_gradient(i, z, problem)
        scale = max(abs(grad), abs(fd), 1e-30)
        worst = max(worst, abs(grad - fd) / scale)
    add("gradient_finite_difference", worst <= 1e-6, f"max rel err {worst:.3e}")

    # consensus variance is bounded below by the summed-precision optimum
    v_opt = optimal_variance(sigma2)
    bound_ok, equality_ok = True, True
    for _ in range(200):
        z = np.exp(rng.uniform(np.log(0.25), np.log(4.0), size=n))
        v = consensus_variance(z, mu_vec, sigma2)
        bound_ok &= v >= v_opt - 1e-12
    for alpha in (0.5, 1.0, 7.0):
        z_star = optimal_profile(mu_vec, sigma2, alpha)
        equality_ok &= abs(consensus_variance(z_star, mu_vec, sigma2) - v_opt) <= 1e-12
    add("variance_lower_bound", bound_ok and equality_ok,
        f"optimum {v_opt:.12g}, bound holds: {bound_ok}, equality on ray: {equality_ok}")

    # equilibria of the gradient field are exactly the optimal ray
    equiv_ok = True
    for _ in range(200):
        z = np.exp(rng.uniform(np.log(0.25), np.log(4.0), size=n))
        near_opt = distance_to_optimal(z, mu_vec, sigma2) < 1e-8
        stationary = np.max(np.abs(z_rhs(z, problem))) < 1e-10
        equiv_ok &= stationary == near_opt
    for alpha in (0.3, 1.0, 5.0):
        z_star = np.asarray(optimal_profile(mu_vec, sigma2, alpha))
        equiv_ok &= np.max(np.abs(z_rhs(z_star, problem))) < 1e-10
    add("equilibrium_equivalence", equiv_ok, "stationarity iff on the optimal ray")

    # learning converges with a monotone hull and positive states
    z0 = resolve_z0(config, seed)
    result = learn(z0, problem, opts=config.integrator, coords=Y_SPACE)
    d = result.diagnostics
    slack = 1e-9 * d.hull_high
    monotone = bool(
        np.all(np.diff(d.y_max) <= slack) and np.all(np.diff(d.y_min) >= -slack)
    )
    add("hull_monotonicity", monotone, "state hull contracts at recorded steps")
    converged = (
        d.terminated_by == Termination.PREDICATE_SATISFIED
        and d.y_spread < DEFAULT_SPREAD_TOL
        and bool(np.all(result.trajectory.states > 0))
    )
    add("learning_convergence", converged,
        f"y-spread {d.y_spread:.3e}, terminated_by {d.terminated_by.value}")
    add("limit_within_hull", d.hull_low <= d.zeta <= d.hull_high,
        f"zeta {d.zeta:.6g} in [{d.hull_low:.6g}, {d.hull_high:.6g}]")

    # same limit whichever coordinates are integrated
    result_z = learn(z0, problem, opts=config.integrator, coords=Z_SPACE)
    gap = np.max(
        np.abs(result_z.z_limit.z - result.z_limit.z) / np.abs(result.z_limit.z)
    )
    add("coordinate_equivalence", gap <= 1e-6, f"limit gap {gap:.3e}")

    # sampled consensus statistics match the closed forms
    z = resolve_z0(config, seed)
    mc = monte_carlo_variance(z, config.social_graph, config.noise, config.trials, seed)
    analytic = consensus_variance(z, mu_vec, sigma2)
    se_mean = np.sqrt(mc.variance / config.trials)
    mc_ok = (
        abs(mc.variance - analytic) <= 4 * mc.stderr
        and abs(mc.mean - config.theta) <= 4 * se_mean
    )
    add("monte_carlo_agreement", mc_ok,
        f"variance {mc.variance:.6g} vs analytic {analytic:.6g} (+-{mc.stderr:.2g})")

    # integrated consensus matches the closed-form prediction
    rng2 = np.random.Generator(np.random.Philox(seed + 1))
    xi = rng2.normal(0.0, np.sqrt(sigma2))
    x0 = config.theta + xi
    trajectory = simulate_opinions(x0, z, config.social_graph, config.integrator)
    predicted = predict_consensus(x0, z, mu_vec)
    ode_gap = np.max(np.abs(trajectory.final_state - predicted))
    add("ode_cross_check", ode_gap <= 1e-8, f"terminal vs closed form gap {ode_gap:.3e}")

    return checks


def cmd_verify(config: ExperimentConfig, out: Path, seed: int) -> int:
    checks = _verify_checks(config, seed)
    all_passed = all(c["passed"] for c in checks)
    write_json(out / "verify.json", {
        "all_passed": all_passed,
        "checks": checks,
        "seed": seed,
        "version": __version__,
    })
    _write_metadata(out, "verify", config.raw, seed, {"all_passed": all_passed})
    for c in checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}: {c['detail']}")
    return 0 if all_passed else 1


def cmd_paper(out: Path, seed: int) -> int:
    """Run the bundled six-agent reference study end to end."""
    example = build_reference_example()
    write_csv(
        out / "centrality.csv",
        ["node", "mu"],
        ((i + 1, float(m)) for i, m in enumerate(example.mu.mu)),
    )
    _, report_y = reproduce_y_consensus(seed, out_dir=out)
    _, groups, report_z = reproduce_z_dissensus(seed, out_dir=out)
    _write_metadata(out, "paper", {"builtin": "six-agent reference example"}, seed, {
        "centrality": example.mu.mu,
        "sigma2": example.sigma2,
        "y_consensus": report_y,
        "z_groups": report_z,
    })
    print(f"y-consensus at zeta={report_y['zeta']:.8g}; groups: {groups}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="wisdomdyn",
        description="Optimal susceptibility profiles and distributed learning "
        "dynamics for opinion consensus on networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    descriptions = {
        "centrality": "compute and write the social-graph centrality vector",
        "simulate": "integrate the opinion averaging dynamics to consensus",
        "learn": "run the distributed susceptibility learning flow",
        "montecarlo": "sample the consensus value and compare with the closed form",
        "verify": "run the full invariant suite and write verify.json",
        "paper": "run the bundled six-agent reference study end to end",
    }
    for name, help_text in descriptions.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=name != "paper",
                       help="path to the JSON experiment config")
        p.add_argument("--out", help="output directory (default: config output_dir)")
        p.add_argument("--seed", type=int, help="seed override for all sampling")
    args = parser.parse_args(argv)

    try:
        _thread_cap()
        if args.command == "paper":
            out = _out_dir(None, args)
            return cmd_paper(out, args.seed if args.seed is not None else 0)
        config = load_config(args.config)
        seed = _effective_seed(config, args.seed)
        out = _out_dir(config, args)
        handler = {
            "centrality": cmd_centrality,
            "simulate": cmd_simulate,
            "learn": cmd_learn,
            "montecarlo": cmd_montecarlo,
            "verify": cmd_verify,
        }[args.command]
        return handler(config, out, seed)
    except (ConfigError, NotStronglyConnectedError, ZeroRowError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except FigureCheckError as err:
        print(f"verification failure: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
