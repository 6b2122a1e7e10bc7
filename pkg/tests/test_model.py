import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from popergm.errors import ConfigError, DataError
from popergm.exact import enumerate_statistics, graph_from_code
from popergm.graphs import Graph, NodeCovariates, dyad_count, dyad_table
from popergm.model import (
    ModelSpec,
    change_statistics,
    compile_program,
    edges,
    gwesp,
    gwesp_weights,
    homotopy,
    log_unnormalized,
    nodematch,
    parse_term,
    summary_statistics,
)

TRIANGLE = Graph.from_edge_list(3, [(0, 1), (1, 2), (0, 2)])


class TestTerms:
    def test_labels(self):
        spec = ModelSpec((edges(), nodematch("hemisphere"), homotopy(), gwesp(0.9)))
        assert spec.labels == (
            "edges", "nodematch.hemisphere", "nodematch.homotopy", "gwesp.fixed.0.9"
        )

    def test_descriptor_round_trip(self):
        descs = ["edges", "nodematch:hemisphere", "homotopy", "gwesp:0.9"]
        spec = ModelSpec.from_descriptors(descs)
        assert spec.descriptors == descs
        assert ModelSpec.from_descriptors(spec.descriptors) == spec

    def test_parse_errors(self):
        with pytest.raises(ConfigError):
            parse_term("triangles")
        with pytest.raises(ConfigError):
            parse_term("nodematch")
        with pytest.raises(ConfigError):
            parse_term("gwesp:sideways")
        with pytest.raises(ConfigError):
            gwesp(-0.5)

    def test_empty_model_rejected(self):
        with pytest.raises(ConfigError):
            ModelSpec(())


class TestSummaryStatistics:
    def test_empty_graph_all_zero(self):
        cov = NodeCovariates.hemispheres(4)
        spec = ModelSpec((edges(), nodematch("hemisphere"), homotopy(), gwesp(0.9)))
        s = summary_statistics(Graph.empty(4), cov, spec)
        assert np.array_equal(s, np.zeros(4))

    def test_triangle_gwesp(self):
        # each triangle edge has exactly one shared partner, and the
        # weight at w=1 is exactly 1, so GWESP equals the edge count
        cov = NodeCovariates.uniform(3)
        spec = ModelSpec((edges(), gwesp(0.9)))
        s = summary_statistics(TRIANGLE, cov, spec)
        assert s == pytest.approx([3.0, 3.0])

    def test_nodematch_count(self):
        cov = NodeCovariates(4, {"label": ("L", "L", "R", "R")})
        g = Graph.from_edge_list(4, [(0, 1), (0, 2)])
        spec = ModelSpec((edges(), nodematch("label")))
        s = summary_statistics(g, cov, spec)
        assert s == pytest.approx([2.0, 1.0])

    def test_homotopy_count(self):
        cov = NodeCovariates.hemispheres(4)  # partners (0,2) and (1,3)
        g = Graph.from_edge_list(4, [(0, 2), (0, 1), (1, 3)])
        spec = ModelSpec((homotopy(),))
        assert summary_statistics(g, cov, spec) == pytest.approx([2.0])

    def test_gwesp_zero_decay_counts_supported_edges(self):
        # with decay 0 the statistic counts edges with >= 1 shared partner
        rng = np.random.default_rng(5)
        cov = NodeCovariates.uniform(7)
        spec = ModelSpec((gwesp(0.0),))
        for _ in range(25):
            adj = np.triu((rng.random((7, 7)) < 0.45).astype(np.uint8), k=1)
            g = Graph(adj + adj.T)
            a = g.adjacency.astype(int)
            shared = (a @ a) * a
            expected = int(np.count_nonzero(np.triu(shared, k=1)))
            assert summary_statistics(g, cov, spec)[0] == pytest.approx(expected)

    def test_gwesp_weights_table(self):
        w = gwesp_weights(0.9, 5)
        assert w[0] == 0.0
        assert w[1] == pytest.approx(1.0)  # e^tau * e^-tau
        assert w[3] > w[2] > w[1]

    def test_missing_attribute(self):
        cov = NodeCovariates.uniform(4)
        spec = ModelSpec((nodematch("hemisphere"),))
        with pytest.raises(DataError):
            summary_statistics(Graph.empty(4), cov, spec)

    def test_missing_homotopy_on_odd_nodes(self):
        cov = NodeCovariates.uniform(5)
        spec = ModelSpec((homotopy(),))
        with pytest.raises(DataError):
            summary_statistics(Graph.empty(5), cov, spec)

    def test_relabeling_invariance(self):
        rng = np.random.default_rng(11)
        n = 8
        cov = NodeCovariates.hemispheres(n)
        spec = ModelSpec((edges(), nodematch("hemisphere"), gwesp(0.9)))
        for _ in range(10):
            adj = np.triu((rng.random((n, n)) < 0.35).astype(np.uint8), k=1)
            adj = adj + adj.T
            perm = rng.permutation(n)
            # permute both the graph and the covariates
            labels = cov.attributes["hemisphere"]
            cov_perm = NodeCovariates(
                n, {"hemisphere": tuple(labels[k] for k in perm)}
            )
            adj_perm = adj[np.ix_(perm, perm)]
            s1 = summary_statistics(Graph(adj), cov, ModelSpec(spec.terms[:2] + (gwesp(0.9),)))
            s2 = summary_statistics(Graph(adj_perm), cov_perm, spec)
            assert s1 == pytest.approx(s2)


class TestChangeStatistics:
    def test_edges_term_is_plus_one(self):
        cov = NodeCovariates.uniform(5)
        spec = ModelSpec((edges(),))
        g = Graph.from_edge_list(5, [(0, 1), (2, 3)])
        assert change_statistics(g, cov, spec, (1, 4)) == pytest.approx([1.0])
        assert change_statistics(g, cov, spec, (0, 1)) == pytest.approx([1.0])

    def test_isolated_edge_has_no_gwesp_effect(self):
        cov = NodeCovariates.uniform(3)
        spec = ModelSpec((gwesp(0.9),))
        assert change_statistics(Graph.empty(3), cov, spec, (0, 1)) == pytest.approx([0.0])

    def test_closing_a_triangle(self):
        cov = NodeCovariates.uniform(3)
        spec = ModelSpec((gwesp(0.9),))
        path = Graph.from_edge_list(3, [(0, 2), (1, 2)])
        assert change_statistics(path, cov, spec, (0, 1)) == pytest.approx([3.0])

    def test_independent_of_current_state(self):
        cov = NodeCovariates.uniform(3)
        spec = ModelSpec((edges(), gwesp(0.9)))
        tri = TRIANGLE
        path = toggle_edge_local(tri, 0, 1)
        assert change_statistics(tri, cov, spec, (0, 1)) == pytest.approx(
            change_statistics(path, cov, spec, (0, 1))
        )

    @pytest.mark.parametrize("n", [3, 4, 5])
    def test_exhaustive_change_equals_difference(self, n):
        # every graph, every dyad: change stats == on/off difference of
        # from-scratch full statistics
        cov = NodeCovariates(
            n, {"label": tuple("ab"[k % 2] for k in range(n))}
        )
        terms = [edges(), nodematch("label"), gwesp(0.9)]
        if n % 2 == 0:
            terms.append(homotopy())
        spec = ModelSpec(tuple(terms))
        table = enumerate_statistics(spec, cov, n)
        di, dj = dyad_table(n)
        for code in range(1 << dyad_count(n)):
            g = graph_from_code(n, code)
            for d in range(len(di)):
                code_on = code | (1 << d)
                code_off = code & ~(1 << d)
                expected = table[code_on] - table[code_off]
                got = change_statistics(g, cov, spec, (int(di[d]), int(dj[d])))
                assert got == pytest.approx(expected, abs=1e-9), (code, d)


class TestNormalization:
    @pytest.mark.parametrize("n,theta", [(4, [-0.4, 0.7]), (5, [-1.0, 0.5])])
    def test_probabilities_sum_to_one(self, n, theta):
        from popergm.exact import exact_log_partition

        cov = NodeCovariates.uniform(n)
        spec = ModelSpec((edges(), gwesp(0.9)))
        table = enumerate_statistics(spec, cov, n)
        logz = exact_log_partition(spec, cov, np.asarray(theta), stats_table=table)
        total = np.exp(table @ np.asarray(theta) - logz).sum()
        assert total == pytest.approx(1.0, abs=1e-10)


class TestLogUnnormalized:
    def test_zero_theta(self):
        assert log_unnormalized(np.zeros(3), np.array([5.0, 1.0, 2.0])) == 0.0

    def test_hand_value(self):
        val = log_unnormalized(np.array([-3.0, 0.5, 0.5]), np.array([10.0, 4.0, 2.0]))
        assert val == pytest.approx(-27.0)

    def test_unit_vector_selects_coordinate(self):
        s = np.array([4.0, 7.0, -2.0])
        for k in range(3):
            e = np.zeros(3)
            e[k] = 1.0
            assert log_unnormalized(e, s) == pytest.approx(s[k])

    def test_dimension_mismatch(self):
        with pytest.raises(DataError):
            log_unnormalized(np.zeros(2), np.zeros(3))


def toggle_edge_local(g, i, j):
    from popergm.graphs import toggle_edge

    return toggle_edge(g, i, j)
