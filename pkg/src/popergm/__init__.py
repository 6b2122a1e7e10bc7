"""Bayesian multilevel exponential random graph models for populations
of networks.

Fits a hierarchical ERGM to a collection of binary undirected networks
on a shared node set via an exchange-within-Gibbs sampler with
interweaved centered/non-centered group-mean updates and adaptive
random-walk proposals, plus posterior-predictive goodness-of-fit
tooling.
"""

from .engine import (
    AdaptiveProposal,
    Hyperpriors,
    MultilevelState,
    PosteriorTrace,
    run_chain,
)
from .errors import ConfigError, DataError, NumericalError, PopergmError
from .exact import exact_distribution, exact_log_partition, enumerate_statistics
from .exchange import ExchangeProposal, ExchangeResult, exchange_update
from .gof import (
    build_envelope,
    degree_distribution,
    esp_distribution,
    geodesic_distribution,
    posterior_predictive,
)
from .graphs import Graph, GraphPopulation, NodeCovariates, density, toggle_edge
from .ingest import CorrelationSet, solve_threshold_for_degree, threshold_networks
from .kernels import active_backend as kernel_backend
from .model import (
    ModelSpec,
    Term,
    change_statistics,
    edges,
    gwesp,
    homotopy,
    log_unnormalized,
    nodematch,
    summary_statistics,
)
from .sampler import SamplerConfig, simulate_ergm, simulate_population

__version__ = "0.1.0"

__all__ = [
    "AdaptiveProposal",
    "ConfigError",
    "CorrelationSet",
    "DataError",
    "ExchangeProposal",
    "ExchangeResult",
    "Graph",
    "GraphPopulation",
    "Hyperpriors",
    "ModelSpec",
    "MultilevelState",
    "NodeCovariates",
    "NumericalError",
    "PopergmError",
    "PosteriorTrace",
    "SamplerConfig",
    "Term",
    "build_envelope",
    "change_statistics",
    "degree_distribution",
    "density",
    "edges",
    "enumerate_statistics",
    "esp_distribution",
    "exact_distribution",
    "exact_log_partition",
    "exchange_update",
    "geodesic_distribution",
    "gwesp",
    "homotopy",
    "kernel_backend",
    "log_unnormalized",
    "nodematch",
    "posterior_predictive",
    "run_chain",
    "simulate_ergm",
    "simulate_population",
    "solve_threshold_for_degree",
    "summary_statistics",
    "threshold_networks",
    "toggle_edge",
]
