"""Command-line interface: simulate study data, fit the multilevel
model, run posterior-predictive checks, and summarize traces.

All commands read one YAML run-config file. Any config key can be
overridden from the environment with a POPERGM_ prefix (nested keys
join with double underscores, e.g. POPERGM_MCMC__ITERATIONS=500) or by
the --seed/--workers/--out flags. Outputs are deterministic given
(config, seed); wall-clock timestamps appear only in manifest files.

Exit codes: 0 success, 2 config error, 3 data error, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import os
import sys
import time

import numpy as np
import yaml

from .engine import Hyperpriors, PosteriorTrace, run_chain
from .errors import ConfigError, DataError, NumericalError, PopergmError
from .gof import METRICS, build_envelope, envelope_table, posterior_predictive
from .graphs import NodeCovariates
from .ingest import load_population, save_population
from .model import ModelSpec
from .sampler import SamplerConfig, simulate_population
from .summarize import summarize_trace

ENV_PREFIX = "POPERGM_"

DEFAULT_CONFIG = {
    "seed": 0,
    "workers": 1,
    "output": "out",
    "model": {"terms": ["edges"]},
    "mcmc": {
        "iterations": 12000,
        "burn_in": 2000,
        "thin": 1,
        "theta_thin": 10,
        "aux_iterations": None,
        "aux_factor": 20,
        "adapt_until": 1000,
        "adapt_every": 20,
        "target_acceptance": 0.234,
        "adapt_beta": 0.05,
        "interweave": True,
        "theta_init": "zeros",
    },
    "hyperpriors": {
        "mu0": 0.0,
        "lambda": 100.0,
        "nu_theta": None,
        "psi_theta": 1.0,
        "nu_mu": None,
        "psi_mu": 1.0,
    },
    "data": {"manifest": None, "covariates": None, "attribute": "label"},
    "simulate": {
        "n_nodes": 30,
        "attribute": "hemisphere",
        "homotopy": True,
        "groups": [],
        "covariance": 0.01,
        "aux_factor": 50,
    },
    "gof": {"n_simulations": 100, "levels": [0.9, 0.95]},
}


# ---------------------------------------------------------------------------
# Config handling
# ---------------------------------------------------------------------------

def _deep_merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[key], dict) and isinstance(value, dict):
            out[key] = _deep_merge(base[key], value, where)
        else:
            out[key] = value
    return out


def _apply_env(config: dict) -> dict:
    out = copy.deepcopy(config)
    for name, raw in sorted(os.environ.items()):
        if not name.startswith(ENV_PREFIX):
            continue
        keys = [k.lower() for k in name[len(ENV_PREFIX):].split("__")]
        node = out
        for key in keys[:-1]:
            if key not in node or not isinstance(node[key], dict):
                raise ConfigError(f"environment override {name} does not match a config section")
            node = node[key]
        if keys[-1] not in node:
            raise ConfigError(f"environment override {name} does not match a config key")
        node[keys[-1]] = yaml.safe_load(raw)
    return out


def load_config(path, seed=None, workers=None, out=None) -> dict:
    """Load, merge with defaults, apply env and flag overrides."""
    if path is None:
        raise ConfigError("a --config file is required")
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path) as fh:
        try:
            user = yaml.safe_load(fh) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse config: {exc}") from None
    if not isinstance(user, dict):
        raise ConfigError("config file must hold a mapping")
    config = _deep_merge(DEFAULT_CONFIG, user)
    config = _apply_env(config)
    if seed is not None:
        config["seed"] = seed
    if workers is not None:
        config["workers"] = workers
    if out is not None:
        config["output"] = out
    _validate_config(config)
    return config


def serialize_config(config: dict) -> str:
    return yaml.safe_dump(config, sort_keys=True)


def config_digest(config: dict) -> str:
    return hashlib.sha256(serialize_config(config).encode()).hexdigest()[:16]


def _validate_config(config: dict) -> None:
    mcmc = config["mcmc"]
    if mcmc["iterations"] <= mcmc["burn_in"]:
        raise ConfigError("mcmc.iterations must exceed mcmc.burn_in")
    for key in ("thin", "theta_thin", "adapt_every", "aux_factor"):
        if int(mcmc[key]) < 1:
            raise ConfigError(f"mcmc.{key} must be >= 1")
    if mcmc["aux_iterations"] is not None and int(mcmc["aux_iterations"]) < 1:
        raise ConfigError("mcmc.aux_iterations must be >= 1 or null")
    if not 0.0 < float(mcmc["target_acceptance"]) < 1.0:
        raise ConfigError("mcmc.target_acceptance must lie in (0, 1)")
    if not config["model"]["terms"]:
        raise ConfigError("model.terms must not be empty")
    for level in config["gof"]["levels"]:
        if not 0.0 < float(level) < 1.0:
            raise ConfigError("gof.levels entries must lie in (0, 1)")
    if int(config["workers"]) < 1:
        raise ConfigError("workers must be >= 1")


def _as_matrix(value, p: int, what: str) -> np.ndarray:
    """Scalar c -> c*I, length-p vector -> diag, else full matrix."""
    if np.isscalar(value):
        return float(value) * np.eye(p)
    arr = np.asarray(value, dtype=np.float64)
    if arr.shape == (p,):
        return np.diag(arr)
    if arr.shape == (p, p):
        return arr
    raise ConfigError(f"{what} must be a scalar, length-{p} vector, or {p}x{p} matrix")


def _as_vector(value, p: int, what: str) -> np.ndarray:
    if np.isscalar(value):
        return float(value) * np.ones(p)
    arr = np.asarray(value, dtype=np.float64)
    if arr.shape != (p,):
        raise ConfigError(f"{what} must be a scalar or length-{p} vector")
    return arr


def _hyperpriors(config: dict, p: int) -> Hyperpriors:
    section = config["hyperpriors"]
    nu_theta = section["nu_theta"]
    nu_mu = section["nu_mu"]
    hyper = Hyperpriors(
        mu0=_as_vector(section["mu0"], p, "hyperpriors.mu0"),
        lam=_as_matrix(section["lambda"], p, "hyperpriors.lambda"),
        nu_theta=float(nu_theta) if nu_theta is not None else p + 2.0,
        psi_theta=_as_matrix(section["psi_theta"], p, "hyperpriors.psi_theta"),
        nu_mu=float(nu_mu) if nu_mu is not None else p + 2.0,
        psi_mu=_as_matrix(section["psi_mu"], p, "hyperpriors.psi_mu"),
    )
    try:
        hyper.validate(p)
    except NumericalError as exc:
        raise ConfigError(str(exc)) from None
    return hyper


def _model_spec(config: dict) -> ModelSpec:
    return ModelSpec.from_descriptors(config["model"]["terms"])


def _sampler_config(config: dict) -> SamplerConfig:
    mcmc = config["mcmc"]
    aux = mcmc["aux_iterations"]
    return SamplerConfig(
        aux_iterations=int(aux) if aux is not None else None,
        aux_factor=int(mcmc["aux_factor"]),
        init="observed",
    )


def _write_table(path, header, rows) -> None:
    def cell(v):
        if isinstance(v, str):
            return v
        if isinstance(v, (int, np.integer)):
            return str(int(v))
        if isinstance(v, float) and float(v).is_integer():
            return format(v, ".1f")
        return format(float(v), ".17g")

    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(cell(v) for v in row) + "\n")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    config = load_config(args.config, args.seed, args.workers, args.out)
    sim = config["simulate"]
    spec = _model_spec(config)
    p = spec.p
    groups = sim["groups"]
    out_dir = config["output"]
    os.makedirs(out_dir, exist_ok=True)

    if not groups or sum(int(g["n"]) for g in groups) == 0:
        pop_dir = os.path.join(out_dir, "population")
        os.makedirs(pop_dir, exist_ok=True)
        with open(os.path.join(pop_dir, "manifest.csv"), "w") as fh:
            fh.write("subject,path,group\n")
        print("warning: no networks requested; wrote an empty manifest", file=sys.stderr)
        return 0

    n_nodes = int(sim["n_nodes"])
    cov = NodeCovariates.hemispheres(
        n_nodes, attribute=sim["attribute"], homotopy=bool(sim["homotopy"])
    )
    sigma = _as_matrix(sim["covariance"], p, "simulate.covariance")
    try:
        chol = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        raise NumericalError("simulate.covariance is not positive definite") from None

    rng = np.random.default_rng(int(config["seed"]))
    thetas: list[np.ndarray] = []
    group_idx: list[int] = []
    group_names: list[str] = []
    true_mus: list[np.ndarray] = []
    for j, spec_g in enumerate(groups):
        mu = np.asarray(spec_g["mu"], dtype=np.float64)
        if mu.shape != (p,):
            raise ConfigError(f"simulate.groups[{j}].mu must have length {p}")
        group_names.append(str(spec_g.get("name", j + 1)))
        true_mus.append(mu)
        for _ in range(int(spec_g["n"])):
            thetas.append(mu + chol @ rng.standard_normal(p))
            group_idx.append(j)

    sampler_cfg = SamplerConfig(aux_factor=int(sim["aux_factor"]), init="empty")
    pop = simulate_population(
        spec, cov, thetas, sampler_cfg, rng,
        group=np.asarray(group_idx, dtype=np.int32),
        group_names=tuple(group_names),
        workers=int(config["workers"]),
    )
    pop_dir = os.path.join(out_dir, "population")
    save_population(pop, pop_dir, attribute=sim["attribute"])

    header = ["subject", "group"] + [f"theta.{lab}" for lab in spec.labels]
    rows = [
        [f"subject_{i + 1:03d}", group_names[group_idx[i]]] + list(thetas[i])
        for i in range(len(thetas))
    ]
    _write_table(os.path.join(out_dir, "true_parameters.csv"), header, rows)
    mu_rows = [[group_names[j]] + list(true_mus[j]) for j in range(len(groups))]
    _write_table(
        os.path.join(out_dir, "true_group_means.csv"),
        ["group"] + [f"mu.{lab}" for lab in spec.labels],
        mu_rows,
    )
    print(f"wrote {pop.n_networks} networks to {pop_dir}")
    return 0


def _load_data(config: dict):
    manifest = config["data"]["manifest"]
    if manifest is None:
        raise ConfigError("data.manifest is required for this command")
    if not os.path.exists(manifest):
        raise DataError(f"data manifest not found: {manifest}")
    covariates = config["data"]["covariates"]
    if covariates is not None and not os.path.exists(covariates):
        raise DataError(f"covariates file not found: {covariates}")
    return load_population(
        manifest, covariates, attribute=config["data"]["attribute"]
    )


def cmd_fit(args) -> int:
    config = load_config(args.config, args.seed, args.workers, args.out)
    spec = _model_spec(config)
    data = _load_data(config)
    hyper = _hyperpriors(config, spec.p)
    mcmc = config["mcmc"]
    started = time.time()
    trace = run_chain(
        data,
        spec,
        hyper=hyper,
        n_iterations=int(mcmc["iterations"]),
        burn_in=int(mcmc["burn_in"]),
        thin=int(mcmc["thin"]),
        theta_thin=int(mcmc["theta_thin"]),
        sampler_config=_sampler_config(config),
        seed=int(config["seed"]),
        workers=int(config["workers"]),
        interweave=bool(mcmc["interweave"]),
        adapt_until=int(mcmc["adapt_until"]),
        adapt_every=int(mcmc["adapt_every"]),
        target_acceptance=float(mcmc["target_acceptance"]),
        adapt_beta=float(mcmc["adapt_beta"]),
        theta_init=str(mcmc["theta_init"]),
    )
    from . import kernels

    trace.meta["config_digest"] = config_digest(config)
    trace.meta["kernel_backend"] = kernels.active_backend()
    trace.meta["runtime_seconds"] = round(time.time() - started, 3)
    trace.meta["created_at"] = time.strftime("%Y-%m-%dT%H:%M:%S")
    trace_dir = os.path.join(config["output"], "trace")
    trace.save(trace_dir)
    rates = trace.meta["acceptance_rates_post_adaptation"]
    lo = min(rates.values()) if rates else float("nan")
    hi = max(rates.values()) if rates else float("nan")
    print(
        f"wrote trace ({trace.n_retained} retained samples) to {trace_dir}; "
        f"post-adaptation acceptance rates in [{lo:.3f}, {hi:.3f}]"
    )
    return 0


def _trace_dir(args, config) -> str:
    if args.trace is not None:
        return args.trace
    return os.path.join(config["output"], "trace")


def cmd_gof(args) -> int:
    config = load_config(args.config, args.seed, args.workers, args.out)
    spec = _model_spec(config)
    data = _load_data(config)
    trace_dir = _trace_dir(args, config)
    if not os.path.isdir(trace_dir):
        raise DataError(f"trace directory not found: {trace_dir}")
    trace = PosteriorTrace.load(trace_dir)
    gof_cfg = config["gof"]
    n_sims = int(gof_cfg["n_simulations"])
    levels = [float(level) for level in gof_cfg["levels"]]
    sampler_cfg = _sampler_config(config)
    out_dir = os.path.join(config["output"], "gof")
    os.makedirs(out_dir, exist_ok=True)
    rng = np.random.default_rng(int(config["seed"]))
    for j, gname in enumerate(trace.group_names):
        sims = posterior_predictive(
            trace, j, n_sims, spec, data.covariates, sampler_cfg, rng,
            workers=int(config["workers"]),
        )
        observed = data.subset(j)
        envelopes = [
            build_envelope(sims, observed, kind, level)
            for level in levels
            for kind in METRICS
        ]
        header, rows = envelope_table(envelopes)
        path = os.path.join(out_dir, f"gof_{gname}.csv")
        _write_table(path, header, rows)
        print(f"wrote {path} ({n_sims} predictive networks)")
    return 0


def cmd_summary(args) -> int:
    config = load_config(args.config, args.seed, args.workers, args.out)
    trace_dir = _trace_dir(args, config)
    if not os.path.isdir(trace_dir):
        raise DataError(f"trace directory not found: {trace_dir}")
    trace = PosteriorTrace.load(trace_dir)
    names, matrix = trace.parameter_columns()
    header, rows = summarize_trace(names, matrix)
    out_dir = config["output"]
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "summary.csv")
    _write_table(path, header, rows)
    width = max(len(name) for name in names)
    print(f"{'parameter':<{width}}  {'mean':>10}  {'sd':>10}  {'q2.5':>10}  {'q97.5':>10}  {'ess':>8}")
    for row in rows:
        print(
            f"{row[0]:<{width}}  {row[1]:>10.4f}  {row[2]:>10.4f}  "
            f"{row[3]:>10.4f}  {row[5]:>10.4f}  {row[6]:>8.1f}"
        )
    print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="popergm",
        description="Bayesian multilevel ERGMs for populations of networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func, needs_trace in (
        ("simulate", cmd_simulate, False),
        ("fit", cmd_fit, False),
        ("gof", cmd_gof, True),
        ("summary", cmd_summary, True),
    ):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="run-config YAML file")
        sp.add_argument("--seed", type=int, default=None, help="override config seed")
        sp.add_argument("--workers", type=int, default=None, help="worker threads")
        sp.add_argument("--out", default=None, help="override output directory")
        if needs_trace:
            sp.add_argument("--trace", default=None, help="trace directory (default <output>/trace)")
        sp.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PopergmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


def run() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    run()
