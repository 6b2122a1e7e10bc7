"""Metropolis dyad-toggle simulation of exponential random graphs.

One sampler serves three roles: auxiliary-network draws inside exchange
updates, posterior-predictive simulation, and synthetic-data generation
for simulation studies.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigError, DataError
from .graphs import Graph, GraphPopulation, NodeCovariates, dyad_count, dyad_table
from .model import ModelSpec, TermProgram, compile_program, summary_from_program

__all__ = [
    "SamplerConfig",
    "simulate_ergm",
    "simulate_with_stats",
    "simulate_population",
    "sample_graph_codes",
]

_DYAD_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _dyads(n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    tabs = _DYAD_CACHE.get(n_nodes)
    if tabs is None:
        di, dj = dyad_table(n_nodes)
        di.setflags(write=False)
        dj.setflags(write=False)
        tabs = _DYAD_CACHE[n_nodes] = (di, dj)
    return tabs


@dataclass(frozen=True)
class SamplerConfig:
    """Inner-sampler settings for a single ERGM draw.

    ``aux_iterations`` is the number of toggle proposals; when None it
    defaults to ``aux_factor`` times the dyad count, so mixing effort
    scales with graph size. ``init`` selects the starting state: the
    string "empty", the string "observed" (caller supplies the graph),
    or an explicit :class:`Graph`.
    """

    aux_iterations: int | None = None
    aux_factor: int = 20
    burn_in: int = 0
    init: str | Graph = "observed"

    def __post_init__(self):
        if self.aux_iterations is not None and self.aux_iterations < 1:
            raise ConfigError("aux_iterations must be >= 1")
        if self.aux_factor < 1:
            raise ConfigError("aux_factor must be >= 1")
        if self.burn_in < 0:
            raise ConfigError("burn_in must be >= 0")

    def steps_for(self, n_nodes: int) -> int:
        if self.aux_iterations is not None:
            return self.aux_iterations
        return self.aux_factor * dyad_count(n_nodes)


def _resolve_init(config: SamplerConfig, n_nodes: int, observed: Graph | None) -> Graph:
    init = config.init
    if isinstance(init, Graph):
        g = init
    elif init == "empty":
        g = Graph.empty(n_nodes)
    elif init == "observed":
        if observed is None:
            raise ConfigError('init="observed" needs an observed graph')
        g = observed
    else:
        raise ConfigError(f"unknown sampler init {init!r}")
    if g.n_nodes != n_nodes:
        raise DataError("init graph node count does not match")
    return g


def run_sampler(
    program: TermProgram,
    theta: np.ndarray,
    adj: np.ndarray,
    stats: np.ndarray,
    n_steps: int,
    rng: np.random.Generator,
    record_every: int = 0,
    codes: np.ndarray | None = None,
) -> int:
    """Advance the toggle chain ``n_steps`` in place; returns accept count.

    Random draws are consumed in a fixed order (dyad indices, then
    uniforms), so a given generator state fully determines the run.
    """
    n_dyads = dyad_count(program.n_nodes)
    if n_steps <= 0 or n_dyads == 0:
        return 0
    di_tab, dj_tab = _dyads(program.n_nodes)
    ids = rng.integers(0, n_dyads, size=n_steps)
    uniforms = rng.random(n_steps)
    return kernels.run_toggle_chain(
        adj, stats, theta, program, di_tab[ids], dj_tab[ids], uniforms,
        record_every, codes,
    )


def simulate_with_stats(
    spec: ModelSpec,
    cov: NodeCovariates,
    theta: np.ndarray,
    config: SamplerConfig,
    rng: np.random.Generator,
    observed: Graph | None = None,
    program: TermProgram | None = None,
) -> tuple[Graph, np.ndarray]:
    """Simulate one graph and return it with its summary statistics.

    The statistics are tracked incrementally by the kernel, one update
    per accepted toggle.
    """
    theta = np.ascontiguousarray(theta, dtype=np.float64)
    n_nodes = cov.n_nodes
    if program is None:
        program = compile_program(spec, cov, n_nodes)
    if theta.shape != (program.p,):
        raise DataError(f"theta has shape {theta.shape}, expected ({program.p},)")
    init = _resolve_init(config, n_nodes, observed)
    adj = init.adjacency_copy()
    stats = summary_from_program(adj, program)
    n_steps = config.burn_in + config.steps_for(n_nodes)
    run_sampler(program, theta, adj, stats, n_steps, rng)
    return Graph(adj, copy=False), stats


def simulate_ergm(
    spec: ModelSpec,
    cov: NodeCovariates,
    theta: np.ndarray,
    config: SamplerConfig,
    rng: np.random.Generator,
    observed: Graph | None = None,
) -> Graph:
    """Approximate ERGM draw: the final state of the toggle chain."""
    graph, _ = simulate_with_stats(spec, cov, theta, config, rng, observed)
    return graph


def simulate_population(
    spec: ModelSpec,
    cov: NodeCovariates,
    thetas,
    config: SamplerConfig,
    rng: np.random.Generator,
    group: np.ndarray | None = None,
    group_names: tuple[str, ...] = (),
    workers: int = 1,
) -> GraphPopulation:
    """Simulate one graph per parameter vector on independent RNG streams.

    Streams are spawned from ``rng`` up front, so results do not depend
    on ``workers``.
    """
    thetas = [np.ascontiguousarray(t, dtype=np.float64) for t in thetas]
    n = len(thetas)
    if group is None:
        group = np.zeros(n, dtype=np.int32)
    streams = rng.spawn(n)
    program = compile_program(spec, cov, cov.n_nodes)

    def one(i: int) -> Graph:
        g, _ = simulate_with_stats(
            spec, cov, thetas[i], config, streams[i], program=program
        )
        return g

    if workers > 1 and n > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            graphs = list(pool.map(one, range(n)))
    else:
        graphs = [one(i) for i in range(n)]
    return GraphPopulation(
        graphs=tuple(graphs), group=group, covariates=cov, group_names=group_names
    )


def sample_graph_codes(
    spec: ModelSpec,
    cov: NodeCovariates,
    theta: np.ndarray,
    n_draws: int,
    thin: int,
    config: SamplerConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Thinned chain of graph bit codes (small graphs only).

    Runs ``config.burn_in`` warm-up steps, then records the graph code
    every ``thin`` steps until ``n_draws`` codes are collected.
    """
    n_nodes = cov.n_nodes
    if dyad_count(n_nodes) > 62:
        raise DataError("graph codes need at most 62 dyads")
    if thin < 1 or n_draws < 1:
        raise ConfigError("n_draws and thin must be >= 1")
    theta = np.ascontiguousarray(theta, dtype=np.float64)
    program = compile_program(spec, cov, n_nodes)
    init = _resolve_init(config, n_nodes, None) if config.init != "observed" else Graph.empty(n_nodes)
    adj = init.adjacency_copy()
    stats = summary_from_program(adj, program)
    if config.burn_in > 0:
        run_sampler(program, theta, adj, stats, config.burn_in, rng)
    codes = np.empty(n_draws, dtype=np.int64)
    run_sampler(
        program, theta, adj, stats, n_draws * thin, rng,
        record_every=thin, codes=codes,
    )
    return codes
