"""Exchange-within-Gibbs posterior sampler for multilevel ERGMs.

Each sweep updates, in order: the individual-level covariance, the
group-mean covariance and population mean (all conjugate draws), the
individual parameters via exchange moves, the group means via their
conjugate conditional, and finally the group means again via a
non-centered exchange move that holds the individual deviations fixed
(the interweaving step). Random-walk proposals adapt toward a 0.234
acceptance rate during a fixed initial window and are frozen afterward.

Reproducibility contract: every random draw comes from a stream keyed
by (root seed, iteration, block), so traces are identical no matter how
many worker threads execute the per-network updates.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from . import exact as exact_mod
from .errors import ConfigError, DataError, NumericalError
from .exchange import exchange_step
from .graphs import GraphPopulation
from .model import ModelSpec, compile_program
from .sampler import SamplerConfig, run_sampler

__all__ = [
    "Hyperpriors",
    "MultilevelState",
    "AdaptiveProposal",
    "PosteriorTrace",
    "run_chain",
    "update_sigma_theta",
    "update_sigma_mu",
    "update_pop_mean",
    "update_group_means_centered",
    "adapt_proposal",
]

_LOG_2PI = math.log(2.0 * math.pi)


# ---------------------------------------------------------------------------
# Linear-algebra helpers
# ---------------------------------------------------------------------------

def _spd_cholesky(mat: np.ndarray, what: str) -> np.ndarray:
    try:
        return np.linalg.cholesky(mat)
    except np.linalg.LinAlgError:
        raise NumericalError(f"{what} is not symmetric positive-definite") from None


def _spd_inverse(mat: np.ndarray, what: str) -> np.ndarray:
    chol = _spd_cholesky(mat, what)
    inv_chol = solve_triangular(chol, np.eye(mat.shape[0]), lower=True)
    return inv_chol.T @ inv_chol


def _mvn_logpdf(x: np.ndarray, mean: np.ndarray, chol: np.ndarray) -> float:
    y = solve_triangular(chol, x - mean, lower=True)
    return float(
        -0.5 * (y @ y) - 0.5 * len(x) * _LOG_2PI - np.sum(np.log(np.diag(chol)))
    )


def _mvn_from_precision(
    b: np.ndarray, precision: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Draw from N(P^-1 b, P^-1) given the precision matrix P."""
    chol = _spd_cholesky(precision, "conditional precision")
    mean = solve_triangular(
        chol.T, solve_triangular(chol, b, lower=True), lower=False
    )
    z = rng.standard_normal(len(b))
    return mean + solve_triangular(chol.T, z, lower=False)


def _invwishart(df: float, scale: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Exact inverse-Wishart draw via the Bartlett decomposition.

    Draws W ~ Wishart(df, scale^-1) and returns W^-1. Random values are
    consumed in a fixed order (off-diagonal normals, then chi-squares).
    """
    p = scale.shape[0]
    if df <= p - 1:
        raise NumericalError(f"inverse-Wishart needs df > p - 1, got df={df}, p={p}")
    scale_inv = _spd_inverse(scale, "inverse-Wishart scale")
    chol_s = _spd_cholesky(scale_inv, "inverse-Wishart scale inverse")
    a = np.zeros((p, p), dtype=np.float64)
    tril = np.tril_indices(p, k=-1)
    a[tril] = rng.standard_normal(len(tril[0]))
    chis = rng.chisquare(df - np.arange(p))
    np.fill_diagonal(a, np.sqrt(chis))
    m = chol_s @ a
    m_inv = solve_triangular(m, np.eye(p), lower=True)
    return m_inv.T @ m_inv


# ---------------------------------------------------------------------------
# Model state and priors
# ---------------------------------------------------------------------------

@dataclass
class Hyperpriors:
    """Fixed constants of the prior stack.

    mu0, lam : population-mean prior N(mu0, lam)
    nu_theta, psi_theta : inverse-Wishart prior on the individual-level
        covariance
    nu_mu, psi_mu : inverse-Wishart prior on the group-mean covariance
    """

    mu0: np.ndarray
    lam: np.ndarray
    nu_theta: float
    psi_theta: np.ndarray
    nu_mu: float
    psi_mu: np.ndarray

    @classmethod
    def default(cls, p: int) -> "Hyperpriors":
        """Weakly informative defaults: diffuse normal, identity scales."""
        return cls(
            mu0=np.zeros(p),
            lam=100.0 * np.eye(p),
            nu_theta=p + 2.0,
            psi_theta=np.eye(p),
            nu_mu=p + 2.0,
            psi_mu=np.eye(p),
        )

    def validate(self, p: int) -> None:
        for name, mat in (("lam", self.lam), ("psi_theta", self.psi_theta), ("psi_mu", self.psi_mu)):
            mat = np.asarray(mat, dtype=np.float64)
            if mat.shape != (p, p):
                raise ConfigError(f"hyperprior {name} must be {p}x{p}")
            _spd_cholesky(mat, f"hyperprior {name}")
        if self.mu0.shape != (p,):
            raise ConfigError(f"hyperprior mu0 must have length {p}")
        if self.nu_theta <= p - 1 or self.nu_mu <= p - 1:
            raise ConfigError("inverse-Wishart degrees of freedom must exceed p - 1")


@dataclass
class MultilevelState:
    """All latent parameters of the multilevel model."""

    theta: np.ndarray       # (n, p) individual-level parameters
    mu_group: np.ndarray    # (J, p) group means
    sigma_theta: np.ndarray # (p, p) individual-level covariance
    mu_pop: np.ndarray      # (p,) population mean
    sigma_mu: np.ndarray    # (p, p) group-mean covariance

    def copy(self) -> "MultilevelState":
        return MultilevelState(
            self.theta.copy(), self.mu_group.copy(), self.sigma_theta.copy(),
            self.mu_pop.copy(), self.sigma_mu.copy(),
        )


# ---------------------------------------------------------------------------
# Conjugate Gibbs updates
# ---------------------------------------------------------------------------

def update_sigma_theta(
    state: MultilevelState, group: np.ndarray, hyper: Hyperpriors,
    rng: np.random.Generator,
) -> np.ndarray:
    """Draw the individual-level covariance from its inverse-Wishart
    conditional given the deviations theta_i - mu_{g_i}."""
    devs = state.theta - state.mu_group[group]
    scale = hyper.psi_theta + devs.T @ devs
    return _invwishart(hyper.nu_theta + len(devs), scale, rng)


def update_sigma_mu(
    state: MultilevelState, hyper: Hyperpriors, rng: np.random.Generator
) -> np.ndarray:
    """Draw the group-mean covariance from its inverse-Wishart conditional."""
    devs = state.mu_group - state.mu_pop
    scale = hyper.psi_mu + devs.T @ devs
    return _invwishart(hyper.nu_mu + len(devs), scale, rng)


def update_pop_mean(
    state: MultilevelState, hyper: Hyperpriors, rng: np.random.Generator
) -> np.ndarray:
    """Draw the population mean from its normal conditional."""
    n_groups = len(state.mu_group)
    prec_mu = _spd_inverse(state.sigma_mu, "sigma_mu")
    prec_lam = _spd_inverse(hyper.lam, "lambda")
    precision = n_groups * prec_mu + prec_lam
    b = prec_mu @ state.mu_group.sum(axis=0) + prec_lam @ hyper.mu0
    return _mvn_from_precision(b, precision, rng)


def update_group_means_centered(
    state: MultilevelState, group: np.ndarray, hyper: Hyperpriors,
    rng: np.random.Generator,
) -> np.ndarray:
    """Draw every group mean from its normal conditional given theta."""
    n_groups = len(state.mu_group)
    p = state.mu_pop.shape[0]
    prec_theta = _spd_inverse(state.sigma_theta, "sigma_theta")
    prec_mu = _spd_inverse(state.sigma_mu, "sigma_mu")
    out = np.empty((n_groups, p), dtype=np.float64)
    prior_b = prec_mu @ state.mu_pop
    for j in range(n_groups):
        members = np.flatnonzero(group == j)
        precision = len(members) * prec_theta + prec_mu
        b = prec_theta @ state.theta[members].sum(axis=0) + prior_b
        out[j] = _mvn_from_precision(b, precision, rng)
    return out


# ---------------------------------------------------------------------------
# Adaptive proposals
# ---------------------------------------------------------------------------

class AdaptiveProposal:
    """Mixture random-walk proposal with window-based adaptation.

    Proposals mix a covariance-shaped kernel scaled by 2.38^2*delta/p
    with a small identity kernel scaled by 0.1^2*delta/p (mixture weight
    ``beta``). Until the first usable covariance estimate exists, only
    the identity kernel is used. ``adapt`` retunes delta toward the
    target acceptance rate and refreshes the covariance estimate.
    """

    def __init__(
        self,
        p: int,
        beta: float = 0.05,
        target: float = 0.234,
        literal_sign: bool = False,
    ):
        if not 0.0 <= beta <= 1.0:
            raise ConfigError("beta must lie in [0, 1]")
        self.p = p
        self.beta = beta
        self.target = target
        self.literal_sign = literal_sign
        self.log_scale = 0.0  # log(delta), delta_1 = 1
        self.base_cov: np.ndarray | None = None
        self._chol: np.ndarray | None = None
        self.window_proposals = 0
        self.window_accepts = 0

    @property
    def scale(self) -> float:
        return math.exp(self.log_scale)

    def sample(self, center: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        root = math.sqrt(self.scale / self.p)
        if self._chol is None:
            z = rng.standard_normal(self.p)
            return center + (0.1 * root) * z
        use_fallback = rng.random() < self.beta
        z = rng.standard_normal(self.p)
        if use_fallback:
            return center + (0.1 * root) * z
        return center + (2.38 * root) * (self._chol @ z)

    def record(self, accepted: bool) -> None:
        self.window_proposals += 1
        self.window_accepts += int(accepted)

    def window_rate(self) -> float:
        if self.window_proposals == 0:
            return self.target
        return self.window_accepts / self.window_proposals

    def adapt(self, history: np.ndarray, iteration: int) -> None:
        """Adaptation checkpoint: retune delta, refresh the covariance.

        Low acceptance shrinks the steps and high acceptance grows them;
        set ``literal_sign`` for the reversed convention.
        """
        rate = self.window_rate()
        step = min(0.5, 1.0 / math.sqrt(iteration))
        if rate < self.target:
            self.log_scale += step if self.literal_sign else -step
        elif rate > self.target:
            self.log_scale += -step if self.literal_sign else step
        self.window_proposals = 0
        self.window_accepts = 0

        history = np.asarray(history, dtype=np.float64)
        if len(history) >= self.p + 2:
            raw = np.atleast_2d(np.cov(history, rowvar=False, ddof=1))
            if not np.any(raw):
                # degenerate history (identical points): identity kernel only
                self._chol = None
                self.base_cov = None
                return
            cov = raw + 1e-6 * np.eye(self.p)
            try:
                self._chol = np.linalg.cholesky(cov)
                self.base_cov = cov
            except np.linalg.LinAlgError:
                self._chol = None
                self.base_cov = None


def adapt_proposal(
    proposal: AdaptiveProposal, chain_history: np.ndarray, iteration: int
) -> AdaptiveProposal:
    """Run one adaptation checkpoint in place and return the proposal."""
    proposal.adapt(chain_history, iteration)
    return proposal


# ---------------------------------------------------------------------------
# Posterior trace
# ---------------------------------------------------------------------------

@dataclass
class PosteriorTrace:
    """Retained posterior samples plus per-block acceptance flags."""

    labels: tuple[str, ...]
    group_names: tuple[str, ...]
    iterations: np.ndarray       # (R,) iteration numbers of retained samples
    mu_group: np.ndarray         # (R, J, p)
    mu_pop: np.ndarray           # (R, p)
    sigma_theta: np.ndarray      # (R, p, p)
    sigma_mu: np.ndarray         # (R, p, p)
    theta_iterations: np.ndarray # (Rt,)
    theta: np.ndarray            # (Rt, n, p)
    block_names: tuple[str, ...]
    acceptance: np.ndarray       # (K, n_blocks) 0/1 flags, full run
    meta: dict = field(default_factory=dict)

    @property
    def n_retained(self) -> int:
        return len(self.iterations)

    def acceptance_rate(self, block: int | str, start_iteration: int = 0) -> float:
        """Acceptance rate of one exchange block from ``start_iteration`` on."""
        if isinstance(block, str):
            block = self.block_names.index(block)
        flags = self.acceptance[start_iteration:, block]
        if len(flags) == 0:
            raise DataError("no iterations in requested window")
        return float(flags.mean())

    def parameter_columns(self) -> tuple[list[str], np.ndarray]:
        """Flattened hyperparameter trace: (column names, (R, C) matrix)."""
        p = len(self.labels)
        names: list[str] = []
        cols: list[np.ndarray] = []
        for j, gname in enumerate(self.group_names):
            for t, label in enumerate(self.labels):
                names.append(f"mu.{gname}.{label}")
                cols.append(self.mu_group[:, j, t])
        for t, label in enumerate(self.labels):
            names.append(f"mu_pop.{label}")
            cols.append(self.mu_pop[:, t])
        for a in range(p):
            for b in range(a, p):
                names.append(f"sigma_theta.{a + 1}.{b + 1}")
                cols.append(self.sigma_theta[:, a, b])
        for a in range(p):
            for b in range(a, p):
                names.append(f"sigma_mu.{a + 1}.{b + 1}")
                cols.append(self.sigma_mu[:, a, b])
        return names, np.column_stack(cols)

    def save(self, out_dir) -> None:
        """Write trace.csv, theta.csv, acceptance.csv and manifest.yaml."""
        import os

        import yaml

        os.makedirs(out_dir, exist_ok=True)
        names, matrix = self.parameter_columns()
        _write_csv(
            os.path.join(out_dir, "trace.csv"),
            ["iteration"] + names,
            np.column_stack([self.iterations, matrix]),
            int_cols=(0,),
        )
        n_nets = self.theta.shape[1]
        theta_rows = []
        for r, it in enumerate(self.theta_iterations):
            for i in range(n_nets):
                theta_rows.append(
                    np.concatenate([[it, i + 1], self.theta[r, i]])
                )
        _write_csv(
            os.path.join(out_dir, "theta.csv"),
            ["iteration", "network"] + [f"theta.{lab}" for lab in self.labels],
            np.array(theta_rows) if theta_rows else np.empty((0, 2 + len(self.labels))),
            int_cols=(0, 1),
        )
        _write_csv(
            os.path.join(out_dir, "acceptance.csv"),
            ["iteration"] + list(self.block_names),
            np.column_stack(
                [np.arange(1, len(self.acceptance) + 1), self.acceptance]
            ),
            int_cols=tuple(range(len(self.block_names) + 1)),
        )
        with open(os.path.join(out_dir, "manifest.yaml"), "w") as fh:
            yaml.safe_dump(self.meta, fh, sort_keys=True)

    @classmethod
    def load(cls, out_dir) -> "PosteriorTrace":
        import os

        import yaml

        with open(os.path.join(out_dir, "manifest.yaml")) as fh:
            meta = yaml.safe_load(fh) or {}
        labels = tuple(meta["terms"])
        group_names = tuple(str(g) for g in meta["groups"])
        p = len(labels)
        n_groups = len(group_names)

        header, data = _read_csv(os.path.join(out_dir, "trace.csv"))
        iterations = data[:, 0].astype(np.int64)
        r = len(iterations)
        cols = {name: data[:, k] for k, name in enumerate(header)}
        mu_group = np.empty((r, n_groups, p))
        for j, gname in enumerate(group_names):
            for t, label in enumerate(labels):
                mu_group[:, j, t] = cols[f"mu.{gname}.{label}"]
        mu_pop = np.column_stack([cols[f"mu_pop.{label}"] for label in labels])
        sigma_theta = np.empty((r, p, p))
        sigma_mu = np.empty((r, p, p))
        for a in range(p):
            for b in range(a, p):
                sigma_theta[:, a, b] = sigma_theta[:, b, a] = cols[f"sigma_theta.{a + 1}.{b + 1}"]
                sigma_mu[:, a, b] = sigma_mu[:, b, a] = cols[f"sigma_mu.{a + 1}.{b + 1}"]

        t_header, t_data = _read_csv(os.path.join(out_dir, "theta.csv"))
        if len(t_data):
            t_iters = np.unique(t_data[:, 0]).astype(np.int64)
            n_nets = int(t_data[:, 1].max())
            theta = np.zeros((len(t_iters), n_nets, p))
            pos = {it: r_ for r_, it in enumerate(t_iters)}
            for row in t_data:
                theta[pos[int(row[0])], int(row[1]) - 1] = row[2:]
        else:
            t_iters = np.empty(0, dtype=np.int64)
            theta = np.empty((0, int(meta.get("n_networks", 0)), p))

        a_header, a_data = _read_csv(os.path.join(out_dir, "acceptance.csv"))
        block_names = tuple(a_header[1:])
        acceptance = a_data[:, 1:].astype(np.uint8) if len(a_data) else np.empty((0, len(block_names)), dtype=np.uint8)

        return cls(
            labels=labels, group_names=group_names, iterations=iterations,
            mu_group=mu_group, mu_pop=mu_pop, sigma_theta=sigma_theta,
            sigma_mu=sigma_mu, theta_iterations=t_iters, theta=theta,
            block_names=block_names, acceptance=acceptance, meta=meta,
        )


def _format_cell(value: float, as_int: bool) -> str:
    if as_int:
        return str(int(value))
    return format(float(value), ".17g")


def _write_csv(path, header, matrix, int_cols=()) -> None:
    int_set = set(int_cols)
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in matrix:
            fh.write(
                ",".join(_format_cell(v, k in int_set) for k, v in enumerate(row)) + "\n"
            )


def _read_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2, dtype=np.float64)
    if data.size == 0:
        data = np.empty((0, len(header)))
    return header, data


# ---------------------------------------------------------------------------
# The chain runner
# ---------------------------------------------------------------------------

class _Workspace:
    """Per-run caches: compiled terms, observed statistics, group lookups."""

    def __init__(self, data: GraphPopulation, spec: ModelSpec,
                 sampler_config: SamplerConfig, likelihood: str):
        from .model import summary_from_program

        self.data = data
        self.spec = spec
        self.n = data.n_networks
        self.n_groups = data.n_groups
        self.p = spec.p
        self.group = data.group
        self.members = [data.members(j) for j in range(data.n_groups)]
        self.program = compile_program(spec, data.covariates, data.n_nodes)
        self.obs_adj = [g.adjacency for g in data.graphs]
        self.obs_stats = np.array(
            [summary_from_program(adj, self.program) for adj in self.obs_adj]
        )
        self.n_steps = sampler_config.burn_in + sampler_config.steps_for(data.n_nodes)
        self.exact = likelihood == "exact"
        if self.exact:
            self.stats_table = exact_mod.enumerate_statistics(
                spec, data.covariates, data.n_nodes
            )
        elif likelihood != "exchange":
            raise ConfigError(f"unknown likelihood mode {likelihood!r}")

    def log_partition(self, theta: np.ndarray) -> float:
        from scipy.special import logsumexp

        return float(logsumexp(self.stats_table @ theta))


def _theta_update(ws, state, i, proposal, chol_sigma_theta, rng):
    """Exchange (or exact-likelihood Metropolis) update of one theta_i."""
    mean = state.mu_group[ws.group[i]]
    theta_cur = state.theta[i]
    if ws.exact:
        theta_prop = proposal.sample(theta_cur, rng)
        log_ar = (
            float((theta_prop - theta_cur) @ ws.obs_stats[i])
            - ws.log_partition(theta_prop) + ws.log_partition(theta_cur)
            + _mvn_logpdf(theta_prop, mean, chol_sigma_theta)
            - _mvn_logpdf(theta_cur, mean, chol_sigma_theta)
        )
        if log_ar >= 0.0 or rng.random() < math.exp(log_ar):
            return theta_prop, True
        return theta_cur, False
    result = exchange_step(
        theta_cur, ws.obs_stats[i],
        lambda t: _mvn_logpdf(t, mean, chol_sigma_theta),
        proposal, ws.program, ws.obs_adj[i], ws.obs_stats[i], ws.n_steps, rng,
    )
    return result.theta, result.accepted


def _mu_ncp_update(ws, state, j, proposal, chol_sigma_mu, rng, member_rngs, pool):
    """Non-centered exchange update of group mean j.

    The deviations theta_i - mu_j are held fixed; one auxiliary network
    per group member makes the normalizing constants cancel in the
    summed acceptance ratio.
    """
    mu_cur = state.mu_group[j].copy()
    mu_prop = proposal.sample(mu_cur, rng)
    diff = mu_prop - mu_cur
    log_ar = (
        _mvn_logpdf(mu_prop, state.mu_pop, chol_sigma_mu)
        - _mvn_logpdf(mu_cur, state.mu_pop, chol_sigma_mu)
    )
    members = ws.members[j]
    if ws.exact:
        for i in members:
            theta_cur = state.theta[i]
            theta_prop = theta_cur + diff
            log_ar += (
                float(diff @ ws.obs_stats[i])
                - ws.log_partition(theta_prop) + ws.log_partition(theta_cur)
            )
    else:
        def simulate_member(rank: int) -> np.ndarray:
            i = members[rank]
            adj = ws.obs_adj[i].copy()
            aux_stats = ws.obs_stats[i].copy()
            run_sampler(
                ws.program, np.ascontiguousarray(state.theta[i] + diff),
                adj, aux_stats, ws.n_steps, member_rngs[rank],
            )
            return aux_stats

        if pool is not None and len(members) > 1:
            aux = list(pool.map(simulate_member, range(len(members))))
        else:
            aux = [simulate_member(r) for r in range(len(members))]
        for rank, i in enumerate(members):
            log_ar += float(diff @ (ws.obs_stats[i] - aux[rank]))
    if log_ar >= 0.0 or rng.random() < math.exp(log_ar):
        return mu_prop, True
    return mu_cur, False


def _initial_state(ws, hyper: Hyperpriors, theta_init: str) -> MultilevelState:
    n, p, n_groups = ws.n, ws.p, ws.n_groups
    if theta_init == "zeros":
        theta = np.zeros((n, p))
    elif theta_init == "logistic":
        theta = np.array([_pseudolikelihood_theta(ws, i) for i in range(n)])
    else:
        raise ConfigError(f"unknown theta_init {theta_init!r}")
    mu_group = np.array(
        [theta[ws.members[j]].mean(axis=0) if len(ws.members[j]) else np.zeros(p)
         for j in range(n_groups)]
    )
    mu_pop = mu_group.mean(axis=0) if n_groups else np.zeros(p)
    return MultilevelState(
        theta=theta,
        mu_group=mu_group,
        sigma_theta=np.asarray(hyper.psi_theta, dtype=np.float64).copy(),
        mu_pop=mu_pop,
        sigma_mu=np.asarray(hyper.psi_mu, dtype=np.float64).copy(),
    )


def _pseudolikelihood_theta(ws, i: int, n_iter: int = 25, ridge: float = 1e-4) -> np.ndarray:
    """Crude dyad-independence initializer: logistic regression of edge
    indicators on the observed change statistics."""
    from . import kernels
    from .graphs import dyad_table

    di, dj = dyad_table(ws.program.n_nodes)
    x = kernels.change_stats_batch(ws.obs_adj[i], di, dj, ws.program)
    y = ws.obs_adj[i][di, dj].astype(np.float64)
    beta = np.zeros(ws.p)
    for _ in range(n_iter):
        eta = np.clip(x @ beta, -30.0, 30.0)
        prob = 1.0 / (1.0 + np.exp(-eta))
        w = np.maximum(prob * (1.0 - prob), 1e-10)
        hess = (x * w[:, None]).T @ x + ridge * np.eye(ws.p)
        grad = x.T @ (y - prob) - ridge * beta
        step = np.linalg.solve(hess, grad)
        beta = beta + step
        if np.max(np.abs(step)) < 1e-8:
            break
    return np.clip(beta, -10.0, 10.0)


def run_chain(
    data: GraphPopulation,
    spec: ModelSpec,
    hyper: Hyperpriors | None = None,
    n_iterations: int = 12000,
    burn_in: int = 2000,
    thin: int = 1,
    theta_thin: int = 10,
    sampler_config: SamplerConfig | None = None,
    seed: int = 0,
    workers: int = 1,
    interweave: bool = True,
    adapt_until: int = 1000,
    adapt_every: int = 20,
    target_acceptance: float = 0.234,
    adapt_beta: float = 0.05,
    literal_adaptation_sign: bool = False,
    likelihood: str = "exchange",
    theta_init: str = "zeros",
) -> PosteriorTrace:
    """Run the full posterior sampler and return the retained trace.

    Parameters beyond the data and model: ``n_iterations`` sweeps with
    the first ``burn_in`` discarded and the rest kept every ``thin``
    iterations (individual-level parameters every ``theta_thin``-th
    retained iteration). Proposals adapt every ``adapt_every``
    iterations during the first ``adapt_until``, then freeze.
    ``interweave=False`` runs the centered-only sampler without the
    non-centered group-mean move. ``likelihood="exact"`` replaces the
    exchange moves with exact-likelihood Metropolis steps computed by
    small-graph enumeration (testing oracle).
    """
    if data.n_networks == 0:
        raise DataError("cannot fit an empty population")
    if n_iterations <= burn_in:
        raise ConfigError("n_iterations must exceed burn_in")
    if thin < 1 or theta_thin < 1:
        raise ConfigError("thin and theta_thin must be >= 1")
    if sampler_config is None:
        sampler_config = SamplerConfig()
    if hyper is None:
        hyper = Hyperpriors.default(spec.p)
    hyper.validate(spec.p)

    ws = _Workspace(data, spec, sampler_config, likelihood)
    n, p, n_groups = ws.n, ws.p, ws.n_groups
    state = _initial_state(ws, hyper, theta_init)

    block_names = tuple(
        [f"theta.{i + 1}" for i in range(n)]
        + ([f"mu_ncp.{g}" for g in data.group_names] if interweave else [])
    )
    n_blocks = len(block_names)
    proposals = [
        AdaptiveProposal(p, beta=adapt_beta, target=target_acceptance,
                         literal_sign=literal_adaptation_sign)
        for _ in range(n_blocks)
    ]
    history: list[list[np.ndarray]] = [[] for _ in range(n_blocks)]

    retained = [k for k in range(burn_in + 1, n_iterations + 1)
                if (k - burn_in) % thin == 0]
    r_total = len(retained)
    retained_set = {k: r for r, k in enumerate(retained)}
    mu_group_tr = np.empty((r_total, n_groups, p))
    mu_pop_tr = np.empty((r_total, p))
    sigma_theta_tr = np.empty((r_total, p, p))
    sigma_mu_tr = np.empty((r_total, p, p))
    theta_keep = [r for r in range(r_total) if r % theta_thin == 0]
    theta_tr = np.empty((len(theta_keep), n, p))
    theta_rows = {r: idx for idx, r in enumerate(theta_keep)}
    acceptance = np.zeros((n_iterations, n_blocks), dtype=np.uint8)

    def stream(*key) -> np.random.Generator:
        return np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key))
        )

    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for k in range(1, n_iterations + 1):
            hyper_rng = stream(k, n_blocks + 1)
            state.sigma_theta = update_sigma_theta(state, ws.group, hyper, hyper_rng)
            state.sigma_mu = update_sigma_mu(state, hyper, hyper_rng)
            state.mu_pop = update_pop_mean(state, hyper, hyper_rng)

            chol_st = _spd_cholesky(state.sigma_theta, "sigma_theta")

            def run_theta(i: int):
                return _theta_update(ws, state, i, proposals[i], chol_st, stream(k, i))

            if pool is not None and n > 1:
                results = list(pool.map(run_theta, range(n)))
            else:
                results = [run_theta(i) for i in range(n)]
            for i, (theta_i, accepted) in enumerate(results):
                state.theta[i] = theta_i
                proposals[i].record(accepted)
                acceptance[k - 1, i] = accepted

            state.mu_group = update_group_means_centered(state, ws.group, hyper, hyper_rng)

            if interweave:
                chol_smu = _spd_cholesky(state.sigma_mu, "sigma_mu")
                for j in range(n_groups):
                    block = n + j
                    member_rngs = [
                        stream(k, block, 1 + rank)
                        for rank in range(len(ws.members[j]))
                    ]
                    mu_j, accepted = _mu_ncp_update(
                        ws, state, j, proposals[block], chol_smu,
                        stream(k, block), member_rngs, pool,
                    )
                    if accepted:
                        shift = mu_j - state.mu_group[j]
                        state.theta[ws.members[j]] += shift
                        state.mu_group[j] = mu_j
                    proposals[block].record(accepted)
                    acceptance[k - 1, block] = accepted

            if k <= adapt_until:
                for i in range(n):
                    history[i].append(state.theta[i].copy())
                for j in range(n_groups) if interweave else ():
                    history[n + j].append(state.mu_group[j].copy())
                if k % adapt_every == 0:
                    for b in range(n_blocks):
                        proposals[b].adapt(np.asarray(history[b]), k)

            r = retained_set.get(k)
            if r is not None:
                mu_group_tr[r] = state.mu_group
                mu_pop_tr[r] = state.mu_pop
                sigma_theta_tr[r] = state.sigma_theta
                sigma_mu_tr[r] = state.sigma_mu
                if r in theta_rows:
                    theta_tr[theta_rows[r]] = state.theta
    finally:
        if pool is not None:
            pool.shutdown()

    frozen_from = min(adapt_until, n_iterations)
    meta = {
        "terms": list(spec.labels),
        "groups": list(data.group_names),
        "n_networks": n,
        "n_nodes": data.n_nodes,
        "seed": seed,
        "n_iterations": n_iterations,
        "burn_in": burn_in,
        "thin": thin,
        "theta_thin": theta_thin,
        "interweave": interweave,
        "likelihood": likelihood,
        "acceptance_rates": {
            name: float(acceptance[:, b].mean()) for b, name in enumerate(block_names)
        },
        "acceptance_rates_post_adaptation": {
            name: float(acceptance[frozen_from:, b].mean())
            for b, name in enumerate(block_names)
            if len(acceptance) > frozen_from
        },
    }
    return PosteriorTrace(
        labels=spec.labels,
        group_names=data.group_names,
        iterations=np.asarray(retained, dtype=np.int64),
        mu_group=mu_group_tr,
        mu_pop=mu_pop_tr,
        sigma_theta=sigma_theta_tr,
        sigma_mu=sigma_mu_tr,
        theta_iterations=np.asarray([retained[r] for r in theta_keep], dtype=np.int64),
        theta=theta_tr,
        block_names=block_names,
        acceptance=acceptance,
        meta=meta,
    )
