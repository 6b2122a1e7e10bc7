import math

import numpy as np
import pytest

from popergm import kernels
from popergm.exact import enumerate_statistics, graph_from_code
from popergm.graphs import NodeCovariates, dyad_count, dyad_table
from popergm.kernels import reference
from popergm.model import ModelSpec, compile_program, summary_from_program

try:
    from popergm.kernels import _speed

    HAVE_COMPILED = True
except ImportError:
    HAVE_COMPILED = False

needs_compiled = pytest.mark.skipif(not HAVE_COMPILED, reason="compiled kernel unavailable")


def _setup(n, descriptors, theta, seed, steps, density=0.0):
    rng = np.random.default_rng(seed)
    if n % 2 == 0:
        cov = NodeCovariates.hemispheres(n)
    else:
        cov = NodeCovariates(n, {"hemisphere": tuple("lr"[k % 2] for k in range(n))})
    spec = ModelSpec.from_descriptors(descriptors)
    prog = compile_program(spec, cov, n)
    adj = np.triu((rng.random((n, n)) < density).astype(np.uint8), k=1)
    adj = np.ascontiguousarray(adj + adj.T)
    n_dyads = dyad_count(n)
    di_t, dj_t = dyad_table(n)
    ids = rng.integers(0, n_dyads, size=steps)
    uniforms = rng.random(steps)
    return prog, adj, np.asarray(theta), di_t[ids], dj_t[ids], uniforms


CASES = [
    (5, ["edges"], [-0.5], 0, 4000, 0.3),
    (12, ["edges", "gwesp:0.9"], [-1.0, 0.6], 1, 8000, 0.2),
    (16, ["edges", "nodematch:hemisphere", "gwesp:0.5"], [-2.0, 0.7, 0.8], 2, 8000, 0.1),
    (30, ["edges", "nodematch:hemisphere", "homotopy", "gwesp:0.9"],
     [-3.0, 0.5, 1.5, 0.5], 3, 20000, 0.05),
    (70, ["edges", "gwesp:0.9"], [-3.5, 0.4], 4, 20000, 0.02),
]


@needs_compiled
@pytest.mark.parametrize("n,descs,theta,seed,steps,density", CASES)
def test_backends_agree_bitwise(n, descs, theta, seed, steps, density):
    prog, adj, theta, di, dj, u = _setup(n, descs, theta, seed, steps, density)
    adj_py = adj.copy()
    adj_c = adj.copy()
    s_py = summary_from_program(adj, prog)
    s_c = s_py.copy()
    acc_py = reference.run_toggle_chain(adj_py, s_py, theta, prog, di, dj, u)
    acc_c = _speed.run_toggle_chain(adj_c, s_c, theta, prog, di, dj, u)
    assert acc_py == acc_c
    assert np.array_equal(adj_py, adj_c)
    assert np.array_equal(s_py, s_c)  # bitwise


@needs_compiled
def test_backends_agree_on_recorded_codes():
    prog, adj, theta, di, dj, u = _setup(6, ["edges", "gwesp:0.9"], [-0.6, 0.4], 7, 5000, 0.3)
    codes_py = np.empty(500, dtype=np.int64)
    codes_c = np.empty(500, dtype=np.int64)
    adj_py, adj_c = adj.copy(), adj.copy()
    s = summary_from_program(adj, prog)
    reference.run_toggle_chain(adj_py, s.copy(), theta, prog, di, dj, u, 10, codes_py)
    _speed.run_toggle_chain(adj_c, s.copy(), theta, prog, di, dj, u, 10, codes_c)
    assert np.array_equal(codes_py, codes_c)
    assert kernels.encode_graph(adj_py) == codes_py[-1]


@pytest.mark.parametrize("n,descs,theta,seed,steps,density", CASES[:4])
def test_incremental_stats_match_recount(n, descs, theta, seed, steps, density):
    prog, adj, theta, di, dj, u = _setup(n, descs, theta, seed, steps, density)
    stats = summary_from_program(adj, prog)
    kernels.run_toggle_chain(adj, stats, theta, prog, di, dj, u)
    recount = summary_from_program(adj, prog)
    assert stats == pytest.approx(recount, abs=1e-9)


def test_change_stats_batch_handles_present_edges():
    prog, adj, theta, di, dj, u = _setup(8, ["edges", "gwesp:0.9"], [0.0, 0.0], 11, 10, 0.5)
    n_dyads = dyad_count(8)
    di_t, dj_t = dyad_table(8)
    batch = kernels.change_stats_batch(adj, di_t, dj_t, prog)
    for d in range(n_dyads):
        single = kernels.change_stats(adj, int(di_t[d]), int(dj_t[d]), prog)
        assert batch[d] == pytest.approx(single)
        # adjacency untouched
    assert np.array_equal(adj, adj.T)


@needs_compiled
def test_batch_matches_reference_exhaustively_n6():
    # all 32768 graphs on 6 nodes, all 15 dyads: compiled change stats
    # equal the difference of independently enumerated full statistics
    n = 6
    cov = NodeCovariates.hemispheres(n)
    spec = ModelSpec.from_descriptors(
        ["edges", "nodematch:hemisphere", "homotopy", "gwesp:0.9"]
    )
    prog = compile_program(spec, cov, n)
    table = enumerate_statistics(spec, cov, n)
    di, dj = dyad_table(n)
    n_dyads = dyad_count(n)
    rng = np.random.default_rng(0)
    sample_for_reference = set(rng.integers(0, 1 << n_dyads, size=60).tolist())
    bit = 1 << np.arange(n_dyads)
    for code in range(1 << n_dyads):
        adj = graph_from_code(n, code).adjacency
        batch = _speed.change_stats_batch(adj, di, dj, prog)
        expected = table[code | bit] - table[code & ~bit]
        np.testing.assert_allclose(batch, expected, atol=1e-9, err_msg=str(code))
        if code in sample_for_reference:
            ref = reference.change_stats_batch(adj, di, dj, prog)
            assert np.array_equal(ref, batch)


def test_shadow_full_statistic_decisions_match():
    # replay the same proposal stream through a full-recount shadow
    # sampler; accept/reject decisions must agree step for step
    n = 10
    prog, adj, theta, di, dj, u = _setup(
        n, ["edges", "nodematch:hemisphere", "gwesp:0.9"], [-1.5, 0.5, 0.7], 13, 1000, 0.15
    )
    shadow_adj = adj.copy()
    shadow_decisions = []
    for t in range(len(di)):
        i, j = int(di[t]), int(dj[t])
        s_cur = summary_from_program(shadow_adj, prog)
        flipped = shadow_adj.copy()
        flipped[i, j] = flipped[j, i] = 1 - flipped[i, j]
        s_new = summary_from_program(flipped, prog)
        logr = float(theta @ (s_new - s_cur))
        accept = logr >= 0.0 or u[t] < math.exp(logr)
        shadow_decisions.append(accept)
        if accept:
            shadow_adj = flipped

    kernel_decisions = []
    work = adj.copy()
    stats = summary_from_program(work, prog)
    for t in range(len(di)):
        before = kernels.encode_graph(work)
        kernels.run_toggle_chain(
            work, stats, theta, prog, di[t:t + 1], dj[t:t + 1], u[t:t + 1]
        )
        kernel_decisions.append(kernels.encode_graph(work) != before)
    assert kernel_decisions == shadow_decisions
    assert np.array_equal(work, shadow_adj)
