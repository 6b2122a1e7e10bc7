"""ERGM summary-statistic terms and their evaluation.

The model is linear in the natural parameters: the log unnormalized
probability of a graph is ``theta @ s(y)`` where ``s`` stacks the term
statistics in declaration order.

Supported terms: edge count, matched-attribute edge count, homotopic
edge count, and edgewise shared partners with a fixed geometric decay.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, DataError
from .graphs import Graph, NodeCovariates, _check_dyad

__all__ = [
    "Term",
    "ModelSpec",
    "TermProgram",
    "edges",
    "nodematch",
    "homotopy",
    "gwesp",
    "compile_program",
    "gwesp_weights",
    "summary_statistics",
    "change_statistics",
    "log_unnormalized",
]

# Term kind codes shared with the simulation kernels.
EDGES, NODEMATCH, HOMOTOPY, GWESP = 0, 1, 2, 3

_KIND_NAMES = {"edges": EDGES, "nodematch": NODEMATCH, "homotopy": HOMOTOPY, "gwesp": GWESP}


@dataclass(frozen=True)
class Term:
    """A single summary-statistic term.

    ``attribute`` is set for nodematch terms, ``decay`` for gwesp terms.
    The gwesp decay is a fixed constant of the model, never inferred.
    """

    kind: str
    attribute: str | None = None
    decay: float | None = None

    def __post_init__(self):
        if self.kind not in _KIND_NAMES:
            raise ConfigError(f"unknown term kind {self.kind!r}")
        if self.kind == "nodematch" and not self.attribute:
            raise ConfigError("nodematch term needs an attribute name")
        if self.kind == "gwesp":
            if self.decay is None or not math.isfinite(self.decay) or self.decay < 0:
                raise ConfigError("gwesp decay must be a finite nonnegative number")

    @property
    def label(self) -> str:
        """Canonical coordinate name used in all posterior outputs."""
        if self.kind == "edges":
            return "edges"
        if self.kind == "nodematch":
            return f"nodematch.{self.attribute}"
        if self.kind == "homotopy":
            return "nodematch.homotopy"
        return f"gwesp.fixed.{self.decay:g}"

    @property
    def descriptor(self) -> str:
        """Config-file form of the term."""
        if self.kind == "edges":
            return "edges"
        if self.kind == "nodematch":
            return f"nodematch:{self.attribute}"
        if self.kind == "homotopy":
            return "homotopy"
        return f"gwesp:{self.decay:g}"


def edges() -> Term:
    return Term("edges")


def nodematch(attribute: str) -> Term:
    return Term("nodematch", attribute=attribute)


def homotopy() -> Term:
    return Term("homotopy")


def gwesp(decay: float) -> Term:
    return Term("gwesp", decay=float(decay))


def parse_term(descriptor: str) -> Term:
    """Parse a term descriptor like "edges", "nodematch:hemisphere",
    "homotopy" or "gwesp:0.9"."""
    head, _, arg = descriptor.partition(":")
    head = head.strip()
    arg = arg.strip()
    if head == "edges":
        return edges()
    if head == "nodematch":
        if not arg:
            raise ConfigError(f"{descriptor!r}: nodematch needs an attribute")
        return nodematch(arg)
    if head == "homotopy":
        return homotopy()
    if head == "gwesp":
        try:
            return gwesp(float(arg))
        except ValueError:
            raise ConfigError(f"{descriptor!r}: gwesp needs a numeric decay") from None
    raise ConfigError(f"unknown term descriptor {descriptor!r}")


@dataclass(frozen=True)
class ModelSpec:
    """Ordered term list; the order fixes the coordinates of theta and s(y)."""

    terms: tuple[Term, ...]

    def __post_init__(self):
        terms = tuple(self.terms)
        if len(terms) < 1:
            raise ConfigError("a model needs at least one term")
        object.__setattr__(self, "terms", terms)

    @property
    def p(self) -> int:
        return len(self.terms)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(t.label for t in self.terms)

    @property
    def descriptors(self) -> list[str]:
        return [t.descriptor for t in self.terms]

    @classmethod
    def from_descriptors(cls, descriptors: Iterable[str]) -> "ModelSpec":
        return cls(tuple(parse_term(d) for d in descriptors))


def gwesp_weights(decay: float, n_nodes: int) -> np.ndarray:
    """Weight of an edge with w shared partners, for w = 0..n_nodes.

    weight(w) = e^decay * (1 - (1 - e^-decay)^w); weight(0) = 0. The
    extra trailing entry keeps w+1 lookups in the change-statistic rule
    in range.
    """
    table = np.zeros(n_nodes + 1, dtype=np.float64)
    base = 1.0 - math.exp(-decay)
    scale = math.exp(decay)
    for w in range(1, n_nodes + 1):
        table[w] = scale * (1.0 - base**w)
    return table


@dataclass(frozen=True, eq=False)
class TermProgram:
    """Flattened term data consumed by the simulation kernels.

    kinds : (p,) int32 term kind codes
    node_data : (p, n) int32 — label codes for nodematch rows, partner
        indices for homotopy rows, zeros elsewhere
    weights : (p, n+1) float64 — gwesp weight tables, zeros elsewhere
    """

    n_nodes: int
    kinds: np.ndarray
    node_data: np.ndarray
    weights: np.ndarray

    @property
    def p(self) -> int:
        return len(self.kinds)


def compile_program(spec: ModelSpec, cov: NodeCovariates, n_nodes: int) -> TermProgram:
    """Resolve a model against covariates into kernel-ready arrays."""
    if cov.n_nodes != n_nodes:
        raise DataError("covariates node count does not match the graph")
    p = spec.p
    kinds = np.empty(p, dtype=np.int32)
    node_data = np.zeros((p, n_nodes), dtype=np.int32)
    weights = np.zeros((p, n_nodes + 1), dtype=np.float64)
    for k, term in enumerate(spec.terms):
        kinds[k] = _KIND_NAMES[term.kind]
        if term.kind == "nodematch":
            node_data[k] = cov.attribute_codes(term.attribute)
        elif term.kind == "homotopy":
            node_data[k] = cov.resolve_homotopy()
        elif term.kind == "gwesp":
            weights[k] = gwesp_weights(term.decay, n_nodes)
    kinds.setflags(write=False)
    node_data.setflags(write=False)
    weights.setflags(write=False)
    return TermProgram(n_nodes, kinds, node_data, weights)


def _shared_partner_counts(adj: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-edge shared-partner counts: (i_idx, counts) over edges i<j."""
    common = (adj.astype(np.int32) @ adj.astype(np.int32))
    rows, cols = np.nonzero(np.triu(adj, k=1))
    return rows, common[rows, cols]


def summary_statistics(g: Graph, cov: NodeCovariates, spec: ModelSpec) -> np.ndarray:
    """Full summary-statistic vector of ``g`` under ``spec``.

    This is a from-scratch recount; the samplers track statistics
    incrementally and are validated against this function.
    """
    program = compile_program(spec, cov, g.n_nodes)
    return summary_from_program(g.adjacency, program)


def summary_from_program(adj: np.ndarray, program: TermProgram) -> np.ndarray:
    out = np.zeros(program.p, dtype=np.float64)
    triu = np.triu(adj, k=1)
    rows, cols = np.nonzero(triu)
    sp_counts = None
    for k, kind in enumerate(program.kinds):
        if kind == EDGES:
            out[k] = len(rows)
        elif kind == NODEMATCH:
            codes = program.node_data[k]
            out[k] = int(np.sum(codes[rows] == codes[cols]))
        elif kind == HOMOTOPY:
            partner = program.node_data[k]
            out[k] = int(np.sum(partner[rows] == cols))
        else:  # GWESP
            if sp_counts is None:
                a = adj.astype(np.int32)
                sp_counts = (a @ a)[rows, cols]
            out[k] = float(np.sum(program.weights[k][sp_counts]))
    return out


def change_statistics(
    g: Graph, cov: NodeCovariates, spec: ModelSpec, dyad: tuple[int, int]
) -> np.ndarray:
    """s(g with dyad on) - s(g with dyad off), regardless of current state."""
    i, j = dyad
    _check_dyad(g.n_nodes, i, j)
    program = compile_program(spec, cov, g.n_nodes)
    from . import kernels

    return kernels.change_stats(g.adjacency, i, j, program)


def log_unnormalized(theta: np.ndarray, stats: np.ndarray) -> float:
    """theta @ s(y), the log unnormalized ERGM probability."""
    theta = np.asarray(theta, dtype=np.float64)
    stats = np.asarray(stats, dtype=np.float64)
    if theta.shape != stats.shape:
        raise DataError(
            f"dimension mismatch: theta has shape {theta.shape}, stats {stats.shape}"
        )
    return float(theta @ stats)
