import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from popergm.errors import DataError
from popergm.graphs import (
    Graph,
    GraphPopulation,
    NodeCovariates,
    default_homotopy_partner,
    density,
    dyad_count,
    dyad_table,
    read_covariates,
    read_edge_list,
    toggle_edge,
    write_covariates,
    write_edge_list,
)


def _assert_valid(g: Graph):
    adj = g.adjacency
    assert np.array_equal(adj, adj.T)
    assert np.all(np.diag(adj) == 0)
    assert g.edge_count == int(np.triu(adj, k=1).sum())


class TestGraph:
    def test_toggle_on_empty(self):
        g = toggle_edge(Graph.empty(3), 0, 1)
        assert g.edge_count == 1
        assert g.has_edge(0, 1)
        _assert_valid(g)

    def test_toggle_breaks_triangle(self):
        tri = Graph.from_edge_list(3, [(0, 1), (1, 2), (0, 2)])
        g = toggle_edge(tri, 0, 1)
        assert g.edge_count == 2
        assert not g.has_edge(0, 1)

    def test_toggle_is_involution(self):
        g = Graph.from_edge_list(4, [(0, 1), (2, 3)])
        assert toggle_edge(toggle_edge(g, 1, 3), 1, 3) == g

    def test_toggle_leaves_original_untouched(self):
        g = Graph.empty(3)
        toggle_edge(g, 0, 1)
        assert g.edge_count == 0

    def test_toggle_rejects_bad_dyads(self):
        g = Graph.empty(3)
        with pytest.raises(DataError):
            toggle_edge(g, 1, 1)
        with pytest.raises(DataError):
            toggle_edge(g, 0, 3)

    def test_from_edge_list(self):
        g = Graph.from_edge_list(3, [(0, 1)])
        assert g.edge_count == 1
        dup = Graph.from_edge_list(3, [(0, 1), (1, 0)])
        assert dup.edge_count == 1
        empty = Graph.from_edge_list(4, [])
        assert empty.edge_count == 0

    def test_from_edge_list_errors(self):
        with pytest.raises(DataError):
            Graph.from_edge_list(3, [(0, 3)])
        with pytest.raises(DataError):
            Graph.from_edge_list(3, [(1, 1)])

    def test_constructor_validation(self):
        with pytest.raises(DataError):
            Graph(np.array([[0, 1], [0, 0]], dtype=np.uint8))  # asymmetric
        with pytest.raises(DataError):
            Graph(np.eye(3, dtype=np.uint8))  # self-loops
        with pytest.raises(DataError):
            Graph(np.full((2, 2), 2, dtype=np.uint8))

    def test_density(self):
        assert density(Graph.complete(5)) == 1.0
        assert density(Graph.empty(4)) == 0.0
        path3 = Graph.from_edge_list(3, [(0, 1), (1, 2)])
        assert density(path3) == pytest.approx(2 / 3)
        with pytest.raises(DataError):
            density(Graph.empty(1))

    def test_adjacency_is_frozen(self):
        g = Graph.empty(3)
        with pytest.raises(ValueError):
            g.adjacency[0, 1] = 1

    @given(st.integers(2, 6), st.data())
    def test_toggle_involution_random(self, n, data):
        rng = np.random.default_rng(data.draw(st.integers(0, 10**6)))
        adj = np.triu((rng.random((n, n)) < 0.4).astype(np.uint8), k=1)
        g = Graph(adj + adj.T)
        i = data.draw(st.integers(0, n - 2))
        j = data.draw(st.integers(i + 1, n - 1))
        once = toggle_edge(g, i, j)
        _assert_valid(once)
        assert abs(once.edge_count - g.edge_count) == 1
        assert toggle_edge(once, j, i) == g

    def test_ops_preserve_invariants_exhaustively(self):
        # every 4-node graph through a toggle round keeps the invariants
        from popergm.exact import graph_from_code

        n = 4
        for code in range(1 << dyad_count(n)):
            g = graph_from_code(n, code)
            _assert_valid(g)
            g2 = toggle_edge(g, 0, 3)
            _assert_valid(g2)


class TestDyads:
    def test_dyad_table_order(self):
        di, dj = dyad_table(4)
        assert list(zip(di.tolist(), dj.tolist())) == [
            (0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)
        ]
        assert dyad_count(4) == 6


class TestNodeCovariates:
    def test_hemispheres(self):
        cov = NodeCovariates.hemispheres(6)
        assert cov.attributes["hemisphere"] == ("left",) * 3 + ("right",) * 3
        assert list(cov.homotopy_partner) == [3, 4, 5, 0, 1, 2]

    def test_attribute_codes(self):
        cov = NodeCovariates(4, {"kind": ("b", "a", "b", "c")})
        assert list(cov.attribute_codes("kind")) == [0, 1, 0, 2]
        with pytest.raises(DataError):
            cov.attribute_codes("missing")

    def test_homotopy_validation(self):
        with pytest.raises(DataError):
            NodeCovariates(4, {}, homotopy_partner=np.array([0, 1, 2, 3]))  # fixed points
        with pytest.raises(DataError):
            NodeCovariates(4, {}, homotopy_partner=np.array([1, 2, 3, 0]))  # not involution
        with pytest.raises(DataError):
            NodeCovariates(4, {}, homotopy_partner=np.array([1, 0, 3, 7]))  # out of range

    def test_resolve_homotopy_default(self):
        cov = NodeCovariates(4, {})
        assert list(cov.resolve_homotopy()) == [2, 3, 0, 1]
        odd = NodeCovariates(5, {})
        with pytest.raises(DataError):
            odd.resolve_homotopy()

    def test_default_partner_is_involution(self):
        partner = default_homotopy_partner(10)
        assert np.array_equal(partner[partner], np.arange(10))
        assert not np.any(partner == np.arange(10))

    def test_length_mismatch(self):
        with pytest.raises(DataError):
            NodeCovariates(3, {"kind": ("a", "b")})


class TestGraphPopulation:
    def _pop(self):
        cov = NodeCovariates.uniform(3)
        graphs = (
            Graph.empty(3),
            Graph.from_edge_list(3, [(0, 1)]),
            Graph.complete(3),
        )
        return GraphPopulation(
            graphs=graphs, group=np.array([0, 1, 0]), covariates=cov,
            group_names=("young", "old"),
        )

    def test_members_and_subset(self):
        pop = self._pop()
        assert list(pop.members(0)) == [0, 2]
        sub = pop.subset(1)
        assert sub.n_networks == 1
        assert sub.group_names == ("old",)
        assert sub.graphs[0].edge_count == 1

    def test_mixed_sizes_rejected(self):
        cov = NodeCovariates.uniform(3)
        with pytest.raises(DataError):
            GraphPopulation(
                graphs=(Graph.empty(3), Graph.empty(4)),
                group=np.array([0, 0]),
                covariates=cov,
            )

    def test_empty_group_rejected(self):
        cov = NodeCovariates.uniform(3)
        with pytest.raises(DataError):
            GraphPopulation(
                graphs=(Graph.empty(3),),
                group=np.array([0]),
                covariates=cov,
                group_names=("a", "b"),
            )


class TestFileFormats:
    def test_edge_list_round_trip(self, tmp_path):
        g = Graph.from_edge_list(5, [(0, 1), (2, 4), (1, 3)])
        path = tmp_path / "g.edges"
        write_edge_list(g, path)
        assert read_edge_list(path) == g

    def test_edge_list_comments_and_one_based(self, tmp_path):
        path = tmp_path / "g.edges"
        path.write_text("# a comment\n1 2\n# another\n3 2\n")
        g = read_edge_list(path, n_nodes=4)
        assert g.edges() == [(0, 1), (1, 2)]

    def test_edge_list_bad_line(self, tmp_path):
        path = tmp_path / "bad.edges"
        path.write_text("1 2 3\n")
        with pytest.raises(DataError):
            read_edge_list(path, n_nodes=4)

    def test_covariates_round_trip(self, tmp_path):
        cov = NodeCovariates.hemispheres(4, attribute="hemisphere")
        path = tmp_path / "cov.csv"
        write_covariates(cov, path, "hemisphere")
        loaded = read_covariates(path, attribute="hemisphere")
        assert loaded.attributes["hemisphere"] == cov.attributes["hemisphere"]
        assert np.array_equal(loaded.homotopy_partner, cov.homotopy_partner)

    def test_covariates_without_partner(self, tmp_path):
        cov = NodeCovariates(3, {"label": ("x", "y", "x")})
        path = tmp_path / "cov.csv"
        write_covariates(cov, path, "label")
        loaded = read_covariates(path)
        assert loaded.homotopy_partner is None
        assert loaded.attributes["label"] == ("x", "y", "x")
