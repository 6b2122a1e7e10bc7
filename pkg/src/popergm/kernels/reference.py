"""Pure-Python toggle-chain kernel.

This is the fallback used when the compiled extension is unavailable,
and the readable reference the compiled kernel is checked against. The
two implementations perform the same floating-point operations in the
same order, so accept/reject decisions agree bit for bit.

All functions here assume validated inputs; validation happens in the
calling modules.
"""

from __future__ import annotations

import math

import numpy as np

from ..model import EDGES, GWESP, HOMOTOPY, NODEMATCH, TermProgram

BACKEND_NAME = "python"


def _dyad_index_table(n: int) -> np.ndarray:
    """(n, n) table mapping a dyad to its upper-triangle rank."""
    table = np.zeros((n, n), dtype=np.int64)
    d = 0
    for i in range(n):
        for j in range(i + 1, n):
            table[i, j] = table[j, i] = d
            d += 1
    return table


def encode_graph(adj: np.ndarray) -> int:
    """Bit code of a small graph: bit d set iff dyad d is an edge."""
    n = adj.shape[0]
    code = 0
    d = 0
    for i in range(n):
        for j in range(i + 1, n):
            if adj[i, j]:
                code |= 1 << d
            d += 1
    return code


def _delta_and_logr(adj, i, j, kinds, node_data, weights, theta, delta):
    """Fill the on-minus-off change statistics for dyad (i, j), which must
    currently be off in ``adj``; returns theta @ delta."""
    logr = 0.0
    for k in range(len(kinds)):
        kind = kinds[k]
        if kind == EDGES:
            d = 1.0
        elif kind == NODEMATCH:
            nd = node_data[k]
            d = 1.0 if nd[i] == nd[j] else 0.0
        elif kind == HOMOTOPY:
            d = 1.0 if node_data[k][i] == j else 0.0
        else:  # GWESP
            wt = weights[k]
            row_i = adj[i]
            row_j = adj[j]
            acc = 0.0
            cn = 0
            # Common neighbours in ascending order; each adjacent edge
            # gains one shared partner, and the new edge itself lands in
            # the cn bin.
            for m in np.flatnonzero(row_i & row_j):
                cn += 1
                sp_im = int(np.count_nonzero(row_i & adj[m]))
                sp_jm = int(np.count_nonzero(row_j & adj[m]))
                acc += (wt[sp_im + 1] - wt[sp_im]) + (wt[sp_jm + 1] - wt[sp_jm])
            acc += wt[cn]
            d = acc
        delta[k] = d
        logr += theta[k] * d
    return logr


def change_stats(adj: np.ndarray, i: int, j: int, program: TermProgram) -> np.ndarray:
    """Change statistics for a dyad that is currently off in ``adj``."""
    delta = np.empty(program.p, dtype=np.float64)
    theta = np.zeros(program.p, dtype=np.float64)
    _delta_and_logr(adj, i, j, program.kinds, program.node_data, program.weights, theta, delta)
    return delta


def change_stats_batch(
    adj: np.ndarray, di: np.ndarray, dj: np.ndarray, program: TermProgram
) -> np.ndarray:
    """Change statistics for many dyads of one graph, any current state."""
    out = np.empty((len(di), program.p), dtype=np.float64)
    work = np.ascontiguousarray(adj, dtype=np.uint8).copy()
    for t in range(len(di)):
        i = int(di[t])
        j = int(dj[t])
        present = work[i, j]
        if present:
            work[i, j] = work[j, i] = 0
        out[t] = change_stats(work, i, j, program)
        if present:
            work[i, j] = work[j, i] = 1
    return out


def run_toggle_chain(
    adj: np.ndarray,
    stats: np.ndarray,
    theta: np.ndarray,
    program: TermProgram,
    di: np.ndarray,
    dj: np.ndarray,
    uniforms: np.ndarray,
    record_every: int = 0,
    codes: np.ndarray | None = None,
) -> int:
    """Run single-dyad Metropolis toggles in place; returns the number accepted.

    ``adj`` and ``stats`` are updated in place. When ``record_every`` is
    positive, the graph bit code after every ``record_every``-th step is
    written into ``codes`` (small graphs only).
    """
    kinds = program.kinds
    node_data = program.node_data
    weights = program.weights
    p = program.p
    delta = np.empty(p, dtype=np.float64)
    accepted = 0

    recording = record_every > 0
    if recording:
        idx_table = _dyad_index_table(adj.shape[0])
        code = encode_graph(adj)
        rec = 0

    for t in range(len(di)):
        i = int(di[t])
        j = int(dj[t])
        present = adj[i, j]
        if present:
            adj[i, j] = 0
            adj[j, i] = 0
        logr = _delta_and_logr(adj, i, j, kinds, node_data, weights, theta, delta)
        if present:
            logr = -logr
        if logr >= 0.0 or uniforms[t] < math.exp(logr):
            accepted += 1
            if present:
                for k in range(p):
                    stats[k] -= delta[k]
            else:
                adj[i, j] = 1
                adj[j, i] = 1
                for k in range(p):
                    stats[k] += delta[k]
            if recording:
                code ^= 1 << int(idx_table[i, j])
        else:
            if present:
                adj[i, j] = 1
                adj[j, i] = 1
        if recording and (t + 1) % record_every == 0:
            codes[rec] = code
            rec += 1
    return accepted
