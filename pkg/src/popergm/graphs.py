"""Undirected binary networks on a fixed node set, with node covariates.

Nodes are indexed 0..n_nodes-1 throughout the Python API. File formats
(edge lists, covariate tables) use 1-based indices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError

__all__ = [
    "Graph",
    "NodeCovariates",
    "GraphPopulation",
    "toggle_edge",
    "density",
    "dyad_count",
    "dyad_table",
    "read_edge_list",
    "write_edge_list",
    "read_covariates",
    "write_covariates",
]


def dyad_count(n_nodes: int) -> int:
    """Number of unordered node pairs."""
    return n_nodes * (n_nodes - 1) // 2


def dyad_table(n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Endpoint arrays for all dyads in row-major upper-triangle order.

    Dyad d corresponds to the pair (i, j) with i < j; the ordering
    (0,1), (0,2), ..., (0,n-1), (1,2), ... is the canonical dyad
    enumeration used by the samplers and by small-graph bit codes.
    """
    i_idx, j_idx = np.triu_indices(n_nodes, k=1)
    return i_idx.astype(np.int32), j_idx.astype(np.int32)


class Graph:
    """Symmetric binary adjacency matrix with no self-loops.

    Instances are frozen after construction: the adjacency buffer is
    marked read-only. Samplers operate on private copies.
    """

    __slots__ = ("_adj", "_edge_count")

    def __init__(self, adjacency, *, copy: bool = True):
        adj = np.array(adjacency, dtype=np.uint8, copy=copy)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise DataError(f"adjacency must be square, got shape {adj.shape}")
        if adj.shape[0] < 1:
            raise DataError("graph needs at least one node")
        if np.any(adj > 1):
            raise DataError("adjacency entries must be 0 or 1")
        if np.any(np.diag(adj) != 0):
            raise DataError("adjacency has nonzero diagonal (self-loops)")
        if not np.array_equal(adj, adj.T):
            raise DataError("adjacency is not symmetric")
        adj.setflags(write=False)
        self._adj = adj
        self._edge_count = int(adj.sum()) // 2

    @property
    def n_nodes(self) -> int:
        return self._adj.shape[0]

    @property
    def adjacency(self) -> np.ndarray:
        """Read-only (n, n) uint8 adjacency matrix."""
        return self._adj

    @property
    def edge_count(self) -> int:
        return self._edge_count

    @classmethod
    def empty(cls, n_nodes: int) -> "Graph":
        if n_nodes < 1:
            raise DataError("graph needs at least one node")
        return cls(np.zeros((n_nodes, n_nodes), dtype=np.uint8), copy=False)

    @classmethod
    def complete(cls, n_nodes: int) -> "Graph":
        adj = np.ones((n_nodes, n_nodes), dtype=np.uint8)
        np.fill_diagonal(adj, 0)
        return cls(adj, copy=False)

    @classmethod
    def from_edge_list(cls, n_nodes: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        """Build a graph from unordered node pairs; duplicates collapse."""
        adj = np.zeros((n_nodes, n_nodes), dtype=np.uint8)
        for i, j in edges:
            _check_dyad(n_nodes, i, j)
            adj[i, j] = adj[j, i] = 1
        return cls(adj, copy=False)

    def has_edge(self, i: int, j: int) -> bool:
        _check_dyad(self.n_nodes, i, j)
        return bool(self._adj[i, j])

    def edges(self) -> list[tuple[int, int]]:
        """Edges as sorted (i, j) pairs with i < j."""
        rows, cols = np.nonzero(np.triu(self._adj, k=1))
        return list(zip(rows.tolist(), cols.tolist()))

    def degrees(self) -> np.ndarray:
        return self._adj.sum(axis=1).astype(np.int64)

    def adjacency_copy(self) -> np.ndarray:
        """Writable copy of the adjacency matrix for in-place samplers."""
        return np.array(self._adj, dtype=np.uint8, copy=True)

    def __eq__(self, other) -> bool:
        return isinstance(other, Graph) and np.array_equal(self._adj, other._adj)

    def __hash__(self):
        return hash((self.n_nodes, self._adj.tobytes()))

    def __repr__(self) -> str:
        return f"Graph(n_nodes={self.n_nodes}, edge_count={self.edge_count})"


def _check_dyad(n_nodes: int, i: int, j: int) -> None:
    if not (0 <= i < n_nodes and 0 <= j < n_nodes):
        raise DataError(f"node index out of range: ({i}, {j}) with n_nodes={n_nodes}")
    if i == j:
        raise DataError(f"self-loop dyad ({i}, {i}) is not allowed")


def toggle_edge(g: Graph, i: int, j: int) -> Graph:
    """Return a copy of ``g`` with dyad {i, j} flipped."""
    _check_dyad(g.n_nodes, i, j)
    adj = g.adjacency_copy()
    adj[i, j] = adj[j, i] = 1 - adj[i, j]
    return Graph(adj, copy=False)


def density(g: Graph) -> float:
    """Fraction of dyads that are edges."""
    if g.n_nodes < 2:
        raise DataError("density requires at least two nodes")
    return g.edge_count / dyad_count(g.n_nodes)


@dataclass(frozen=True, eq=False)
class NodeCovariates:
    """Categorical node attributes plus an optional homotopic pairing.

    Parameters
    ----------
    n_nodes : int
        Number of nodes; all attribute vectors must have this length.
    attributes : mapping of str to sequence
        Named categorical labels, one value per node.
    homotopy_partner : array of int, optional
        ``homotopy_partner[i]`` is the mirror node of i. Must be an
        involution with no fixed points.
    """

    n_nodes: int
    attributes: Mapping[str, tuple] = field(default_factory=dict)
    homotopy_partner: np.ndarray | None = None

    def __post_init__(self):
        attrs = {name: tuple(values) for name, values in self.attributes.items()}
        object.__setattr__(self, "attributes", attrs)
        for name, values in attrs.items():
            if len(values) != self.n_nodes:
                raise DataError(
                    f"attribute {name!r} has length {len(values)}, expected {self.n_nodes}"
                )
        if self.homotopy_partner is not None:
            partner = np.asarray(self.homotopy_partner, dtype=np.int32)
            if partner.shape != (self.n_nodes,):
                raise DataError("homotopy_partner must have one entry per node")
            idx = np.arange(self.n_nodes)
            if np.any(partner == idx):
                raise DataError("homotopy_partner has fixed points")
            if np.any(partner < 0) or np.any(partner >= self.n_nodes):
                raise DataError("homotopy_partner index out of range")
            if not np.array_equal(partner[partner], idx):
                raise DataError("homotopy_partner is not an involution")
            partner.setflags(write=False)
            object.__setattr__(self, "homotopy_partner", partner)

    @classmethod
    def hemispheres(
        cls,
        n_nodes: int,
        attribute: str = "hemisphere",
        labels: tuple[str, str] = ("left", "right"),
        homotopy: bool = True,
    ) -> "NodeCovariates":
        """Two equal halves with the mirror pairing i <-> i + n/2."""
        if n_nodes % 2 != 0:
            raise DataError("hemisphere covariates require an even node count")
        half = n_nodes // 2
        values = (labels[0],) * half + (labels[1],) * half
        partner = default_homotopy_partner(n_nodes) if homotopy else None
        return cls(n_nodes, {attribute: values}, partner)

    @classmethod
    def uniform(cls, n_nodes: int) -> "NodeCovariates":
        """Covariates with no attributes and no pairing."""
        return cls(n_nodes, {})

    def attribute_codes(self, name: str) -> np.ndarray:
        """Integer codes for a named attribute, in first-appearance order."""
        if name not in self.attributes:
            raise DataError(f"attribute {name!r} not present in covariates")
        values = self.attributes[name]
        seen: dict = {}
        codes = np.empty(self.n_nodes, dtype=np.int32)
        for k, v in enumerate(values):
            codes[k] = seen.setdefault(v, len(seen))
        return codes

    def resolve_homotopy(self) -> np.ndarray:
        """Explicit pairing if given, else the default i <-> i + n/2."""
        if self.homotopy_partner is not None:
            return self.homotopy_partner
        if self.n_nodes % 2 != 0:
            raise DataError(
                "no homotopy pairing supplied and the default mirror rule "
                "needs an even node count"
            )
        return default_homotopy_partner(self.n_nodes)


def default_homotopy_partner(n_nodes: int) -> np.ndarray:
    """Mirror pairing: node i pairs with node i + n/2 (even n only)."""
    if n_nodes % 2 != 0:
        raise DataError("default homotopy pairing requires an even node count")
    half = n_nodes // 2
    partner = np.concatenate(
        [np.arange(half, n_nodes), np.arange(0, half)]
    ).astype(np.int32)
    return partner


@dataclass(frozen=True, eq=False)
class GraphPopulation:
    """An ordered collection of graphs on a common node set.

    ``group`` holds 0-based group indices; ``group_names`` maps them back
    to the external labels.
    """

    graphs: tuple[Graph, ...]
    group: np.ndarray
    covariates: NodeCovariates
    group_names: tuple[str, ...] = ()

    def __post_init__(self):
        graphs = tuple(self.graphs)
        object.__setattr__(self, "graphs", graphs)
        group = np.asarray(self.group, dtype=np.int32)
        group.setflags(write=False)
        object.__setattr__(self, "group", group)
        if group.shape != (len(graphs),):
            raise DataError("group vector length must match the number of graphs")
        if len(graphs) > 0:
            n_nodes = graphs[0].n_nodes
            if any(g.n_nodes != n_nodes for g in graphs):
                raise DataError("all graphs must share the same node count")
            if self.covariates.n_nodes != n_nodes:
                raise DataError("covariates node count does not match the graphs")
        names = self.group_names
        if not names:
            names = tuple(str(j + 1) for j in range(int(group.max()) + 1 if len(graphs) else 0))
            object.__setattr__(self, "group_names", names)
        n_groups = len(self.group_names)
        if len(graphs) > 0:
            if group.min() < 0 or group.max() >= n_groups:
                raise DataError("group index out of range")
            present = np.unique(group)
            if len(present) != n_groups:
                raise DataError("every group must be nonempty")

    @property
    def n_networks(self) -> int:
        return len(self.graphs)

    @property
    def n_nodes(self) -> int:
        if not self.graphs:
            raise DataError("empty population has no node count")
        return self.graphs[0].n_nodes

    @property
    def n_groups(self) -> int:
        return len(self.group_names)

    def members(self, j: int) -> np.ndarray:
        """Indices of the networks in group ``j``, in order."""
        return np.flatnonzero(self.group == j)

    def subset(self, j: int) -> "GraphPopulation":
        """Single-group population holding group ``j``'s networks."""
        idx = self.members(j)
        return GraphPopulation(
            graphs=tuple(self.graphs[i] for i in idx),
            group=np.zeros(len(idx), dtype=np.int32),
            covariates=self.covariates,
            group_names=(self.group_names[j],),
        )


# ---------------------------------------------------------------------------
# File formats (1-based node indices)
# ---------------------------------------------------------------------------

def write_edge_list(g: Graph, path) -> None:
    """Write one edge per line as "i j" (1-based), with a node-count header."""
    with open(path, "w") as fh:
        fh.write(f"# nodes: {g.n_nodes}\n")
        for i, j in g.edges():
            fh.write(f"{i + 1} {j + 1}\n")


def read_edge_list(path, n_nodes: int | None = None) -> Graph:
    """Read an edge-list file; '#' starts a comment.

    The node count is taken from ``n_nodes``, a "# nodes: N" header, or
    the maximum index seen, in that priority order.
    """
    edges: list[tuple[int, int]] = []
    header_nodes = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if line.startswith("#"):
                body = line[1:].strip()
                if body.lower().startswith("nodes:"):
                    header_nodes = int(body.split(":", 1)[1])
                continue
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise DataError(f"{path}:{lineno}: expected 'i j', got {line!r}")
            i, j = int(parts[0]) - 1, int(parts[1]) - 1
            edges.append((i, j))
    if n_nodes is None:
        n_nodes = header_nodes
    if n_nodes is None:
        if not edges:
            raise DataError(f"{path}: no node count header and no edges")
        n_nodes = max(max(i, j) for i, j in edges) + 1
    return Graph.from_edge_list(n_nodes, edges)


def write_covariates(cov: NodeCovariates, path, attribute: str) -> None:
    """Write a node_id,label[,homotopy_partner] table (1-based ids)."""
    labels = cov.attributes.get(attribute)
    if labels is None:
        raise DataError(f"attribute {attribute!r} not present in covariates")
    partner = cov.homotopy_partner
    with open(path, "w") as fh:
        if partner is None:
            fh.write("node_id,label\n")
            for i in range(cov.n_nodes):
                fh.write(f"{i + 1},{labels[i]}\n")
        else:
            fh.write("node_id,label,homotopy_partner\n")
            for i in range(cov.n_nodes):
                fh.write(f"{i + 1},{labels[i]},{partner[i] + 1}\n")


def read_covariates(path, attribute: str = "label") -> NodeCovariates:
    """Read a covariate table written by :func:`write_covariates`.

    The label column is stored under ``attribute``.
    """
    import csv

    rows = []
    with open(path) as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "node_id" not in reader.fieldnames:
            raise DataError(f"{path}: covariate file needs a node_id column")
        has_partner = "homotopy_partner" in reader.fieldnames
        for row in reader:
            rows.append(row)
    n_nodes = len(rows)
    labels: list = [None] * n_nodes
    partner = np.full(n_nodes, -1, dtype=np.int32) if rows else None
    for row in rows:
        idx = int(row["node_id"]) - 1
        if not 0 <= idx < n_nodes:
            raise DataError(f"{path}: node_id {idx + 1} out of range 1..{n_nodes}")
        labels[idx] = row["label"]
        if has_partner:
            partner[idx] = int(row["homotopy_partner"]) - 1
    if any(v is None for v in labels):
        raise DataError(f"{path}: duplicate or missing node ids")
    return NodeCovariates(
        n_nodes,
        {attribute: tuple(labels)},
        partner if has_partner else None,
    )
