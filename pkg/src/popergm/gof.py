"""Posterior-predictive goodness-of-fit metrics.

Three network metric distributions (degree, geodesic distance, edgewise
shared partners) computed for observed and model-simulated networks,
summarized as per-bin credible-interval envelopes. The module emits
tables; plotting is left to external tools.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from .graphs import Graph, GraphPopulation, NodeCovariates, dyad_table
from .model import ModelSpec, compile_program
from .sampler import SamplerConfig, simulate_with_stats

__all__ = [
    "MetricDistribution",
    "PredictiveEnvelope",
    "degree_distribution",
    "geodesic_distribution",
    "esp_distribution",
    "metric_distribution",
    "posterior_predictive",
    "build_envelope",
    "envelope_table",
]

METRICS = ("degree", "geodesic", "esp")


@dataclass(frozen=True, eq=False)
class MetricDistribution:
    """Histogram of one network metric over its full support.

    Degree counts nodes (sum n); geodesic counts unordered node pairs
    (sum n(n-1)/2) with a final infinity bin for disconnected pairs;
    esp counts edges by their endpoints' shared-partner count.
    """

    kind: str
    bins: tuple
    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        if len(self.bins) != len(counts):
            raise DataError("bins and counts must align")


def degree_distribution(g: Graph) -> MetricDistribution:
    """Node counts at each degree 0..n-1."""
    n = g.n_nodes
    counts = np.bincount(g.degrees(), minlength=n)
    return MetricDistribution("degree", tuple(range(n)), counts)


def _bfs_distances(adj_bool: np.ndarray, source: int) -> np.ndarray:
    n = adj_bool.shape[0]
    dist = np.full(n, -1, dtype=np.int64)
    dist[source] = 0
    frontier = np.zeros(n, dtype=bool)
    frontier[source] = True
    d = 0
    while frontier.any():
        d += 1
        reached = adj_bool[frontier].any(axis=0)
        frontier = reached & (dist < 0)
        dist[frontier] = d
    return dist


def geodesic_distribution(g: Graph) -> MetricDistribution:
    """Shortest-path lengths over unordered pairs; unreachable pairs land
    in the infinity bin."""
    n = g.n_nodes
    adj_bool = g.adjacency.astype(bool)
    counts = np.zeros(n, dtype=np.int64)  # index d-1 for d = 1..n-1, last = inf
    for source in range(n):
        dist = _bfs_distances(adj_bool, source)
        for j in range(source + 1, n):
            if dist[j] < 0:
                counts[-1] += 1
            else:
                counts[dist[j] - 1] += 1
    bins = tuple(range(1, n)) + (math.inf,)
    return MetricDistribution("geodesic", bins, counts)


def esp_distribution(g: Graph) -> MetricDistribution:
    """Edge counts by number of shared partners of the endpoints."""
    n = g.n_nodes
    adj = g.adjacency.astype(np.int32)
    rows, cols = np.nonzero(np.triu(adj, k=1))
    shared = (adj @ adj)[rows, cols]
    counts = np.bincount(shared, minlength=max(n - 1, 1))
    return MetricDistribution("esp", tuple(range(max(n - 1, 1))), counts)


_METRIC_FNS = {
    "degree": degree_distribution,
    "geodesic": geodesic_distribution,
    "esp": esp_distribution,
}


def metric_distribution(g: Graph, kind: str) -> MetricDistribution:
    try:
        return _METRIC_FNS[kind](g)
    except KeyError:
        raise ConfigError(f"unknown metric kind {kind!r}") from None


def posterior_predictive(
    trace,
    group: int | str,
    n_sims: int,
    spec: ModelSpec,
    cov: NodeCovariates,
    sampler_config: SamplerConfig,
    rng: np.random.Generator,
    workers: int = 1,
) -> list[Graph]:
    """Simulate networks at group-mean values drawn uniformly from the trace.

    Each simulation runs on its own pre-spawned RNG stream, so results
    do not depend on ``workers``.
    """
    if n_sims < 1:
        raise ConfigError("n_sims must be >= 1")
    if trace.n_retained == 0:
        raise DataError("posterior trace is empty")
    if isinstance(group, str):
        group = trace.group_names.index(group)
    rows = rng.integers(0, trace.n_retained, size=n_sims)
    streams = rng.spawn(n_sims)
    mus = trace.mu_group[rows, group]
    program = compile_program(spec, cov, cov.n_nodes)
    config = SamplerConfig(
        aux_iterations=sampler_config.aux_iterations,
        aux_factor=sampler_config.aux_factor,
        burn_in=sampler_config.burn_in,
        init="empty",
    )

    def one(s: int) -> Graph:
        g, _ = simulate_with_stats(
            spec, cov, mus[s], config, streams[s], program=program
        )
        return g

    if workers > 1 and n_sims > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, range(n_sims)))
    return [one(s) for s in range(n_sims)]


@dataclass(frozen=True, eq=False)
class PredictiveEnvelope:
    """Per-bin simulation quantiles with observed five-number summaries."""

    kind: str
    level: float
    bins: tuple
    obs_median: np.ndarray
    obs_q1: np.ndarray
    obs_q3: np.ndarray
    obs_min: np.ndarray
    obs_max: np.ndarray
    sim_lower: np.ndarray
    sim_upper: np.ndarray


def _counts_matrix(graphs, kind: str) -> np.ndarray:
    return np.array([metric_distribution(g, kind).counts for g in graphs])


def build_envelope(
    sims: list[Graph],
    observed: GraphPopulation,
    kind: str,
    level: float,
) -> PredictiveEnvelope:
    """Empirical envelope of one metric over simulated networks.

    The simulated networks' per-bin quantiles at (1 +/- level)/2 sit
    alongside the observed networks' per-bin five-number summaries.
    Trailing all-zero bins are trimmed (the geodesic infinity bin is
    always kept).
    """
    if not 0.0 < level < 1.0:
        raise ConfigError("level must lie in (0, 1)")
    if not sims or observed.n_networks == 0:
        raise DataError("need at least one simulated and one observed network")
    bins = metric_distribution(sims[0], kind).bins
    sim_counts = _counts_matrix(sims, kind)
    obs_counts = _counts_matrix(observed.graphs, kind)
    if sim_counts.shape[1] != obs_counts.shape[1]:
        raise DataError("simulated and observed networks differ in size")

    nonzero = np.flatnonzero(
        sim_counts.any(axis=0) | obs_counts.any(axis=0)
    )
    last = int(nonzero[-1]) if len(nonzero) else 0
    keep = last + 1
    if kind == "geodesic":
        keep = len(bins)  # keep the infinity bin and everything below it
        if last + 1 < len(bins) - 1:
            keep_finite = last + 1
            idx = list(range(keep_finite)) + [len(bins) - 1]
        else:
            idx = list(range(len(bins)))
    else:
        idx = list(range(keep))
    sim_counts = sim_counts[:, idx]
    obs_counts = obs_counts[:, idx]
    bins = tuple(bins[i] for i in idx)

    alpha = (1.0 - level) / 2.0
    sim_lower = np.quantile(sim_counts, alpha, axis=0)
    sim_upper = np.quantile(sim_counts, 1.0 - alpha, axis=0)
    return PredictiveEnvelope(
        kind=kind,
        level=level,
        bins=bins,
        obs_median=np.median(obs_counts, axis=0),
        obs_q1=np.quantile(obs_counts, 0.25, axis=0),
        obs_q3=np.quantile(obs_counts, 0.75, axis=0),
        obs_min=obs_counts.min(axis=0).astype(np.float64),
        obs_max=obs_counts.max(axis=0).astype(np.float64),
        sim_lower=sim_lower,
        sim_upper=sim_upper,
    )


def envelope_table(envelopes: list[PredictiveEnvelope]) -> tuple[list[str], list[list]]:
    """Tidy rows (metric, bin, obs summaries, sim bounds, level) for CSV."""
    header = [
        "metric", "bin", "obs_median", "obs_q1", "obs_q3",
        "sim_lower", "sim_upper", "level",
    ]
    rows = []
    for env in envelopes:
        for b, label in enumerate(env.bins):
            bin_label = "Inf" if label == math.inf else str(int(label))
            rows.append([
                env.kind, bin_label,
                env.obs_median[b], env.obs_q1[b], env.obs_q3[b],
                env.sim_lower[b], env.sim_upper[b], env.level,
            ])
    return header, rows
