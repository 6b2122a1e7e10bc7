"""Exact small-graph enumeration.

Evaluates summary statistics for every graph on up to 7 nodes by brute
force, giving exact normalizing constants and exact distributions to
test the samplers against. Statistics are computed from scratch for
each graph, independently of the incremental change-statistic rules.
"""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from .errors import DataError
from .graphs import Graph, NodeCovariates, dyad_count, dyad_table
from .model import EDGES, GWESP, HOMOTOPY, NODEMATCH, ModelSpec, compile_program

__all__ = [
    "MAX_ENUM_NODES",
    "enumerate_statistics",
    "exact_log_partition",
    "exact_distribution",
    "graph_from_code",
]

MAX_ENUM_NODES = 7


def _check_enumerable(n_nodes: int) -> None:
    if n_nodes > MAX_ENUM_NODES:
        raise DataError(
            f"exact enumeration supports at most {MAX_ENUM_NODES} nodes, got {n_nodes}"
        )


def graph_from_code(n_nodes: int, code: int) -> Graph:
    """Graph whose dyads (in upper-triangle order) are the bits of ``code``."""
    di, dj = dyad_table(n_nodes)
    adj = np.zeros((n_nodes, n_nodes), dtype=np.uint8)
    for d in range(len(di)):
        if (code >> d) & 1:
            adj[di[d], dj[d]] = adj[dj[d], di[d]] = 1
    return Graph(adj, copy=False)


def enumerate_statistics(
    spec: ModelSpec, cov: NodeCovariates, n_nodes: int, chunk: int = 1 << 16
) -> np.ndarray:
    """(2^D, p) statistics of every graph, indexed by graph bit code."""
    _check_enumerable(n_nodes)
    program = compile_program(spec, cov, n_nodes)
    n_dyads = dyad_count(n_nodes)
    di, dj = dyad_table(n_nodes)
    total = 1 << n_dyads
    table = np.empty((total, spec.p), dtype=np.float64)

    # Per-dyad indicator masks for the pairwise terms.
    masks = {}
    need_gwesp = False
    for k, kind in enumerate(program.kinds):
        if kind == NODEMATCH:
            codes = program.node_data[k]
            masks[k] = (codes[di] == codes[dj]).astype(np.float64)
        elif kind == HOMOTOPY:
            partner = program.node_data[k]
            masks[k] = (partner[di] == dj).astype(np.float64)
        elif kind == GWESP:
            need_gwesp = True

    bit_positions = np.arange(n_dyads, dtype=np.uint64)
    for start in range(0, total, chunk):
        stop = min(start + chunk, total)
        codes = np.arange(start, stop, dtype=np.uint64)
        bits = ((codes[:, None] >> bit_positions[None, :]) & 1).astype(np.uint8)
        m = stop - start
        shared = None
        if need_gwesp:
            adj = np.zeros((m, n_nodes, n_nodes), dtype=np.uint8)
            adj[:, di, dj] = bits
            adj[:, dj, di] = bits
            a = adj.astype(np.int16)
            shared = np.matmul(a, a)[:, di, dj]
        for k, kind in enumerate(program.kinds):
            if kind == EDGES:
                table[start:stop, k] = bits.sum(axis=1)
            elif kind in (NODEMATCH, HOMOTOPY):
                table[start:stop, k] = bits @ masks[k]
            else:  # GWESP
                w = program.weights[k]
                table[start:stop, k] = np.sum(bits * w[shared], axis=1)
    return table


def exact_log_partition(
    spec: ModelSpec,
    cov: NodeCovariates,
    theta: np.ndarray,
    stats_table: np.ndarray | None = None,
) -> float:
    """log Z(theta): log of the sum of exp(theta @ s(y)) over all graphs.

    A precomputed ``stats_table`` from :func:`enumerate_statistics` may
    be supplied to amortize the enumeration over repeated calls.
    """
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (spec.p,):
        raise DataError(f"theta has shape {theta.shape}, expected ({spec.p},)")
    if stats_table is None:
        stats_table = enumerate_statistics(spec, cov, cov.n_nodes)
    return float(logsumexp(stats_table @ theta))


def exact_distribution(
    spec: ModelSpec,
    cov: NodeCovariates,
    theta: np.ndarray,
    stats_table: np.ndarray | None = None,
) -> np.ndarray:
    """Exact probability of every graph, indexed by graph bit code."""
    theta = np.asarray(theta, dtype=np.float64)
    if stats_table is None:
        stats_table = enumerate_statistics(spec, cov, cov.n_nodes)
    logw = stats_table @ theta
    logw -= logsumexp(logw)
    return np.exp(logw)
