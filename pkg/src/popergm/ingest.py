"""Build binary network populations from correlation matrices.

Networks are formed by thresholding per-subject correlation matrices;
the threshold can be solved to hit a target mean degree pooled across
subjects. Also holds the population file formats (per-subject edge
lists plus a manifest table).
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .graphs import (
    Graph,
    GraphPopulation,
    NodeCovariates,
    read_covariates,
    read_edge_list,
    write_covariates,
    write_edge_list,
)

__all__ = [
    "CorrelationSet",
    "threshold_networks",
    "solve_threshold_for_degree",
    "load_correlation_set",
    "save_population",
    "load_population",
]


@dataclass(frozen=True, eq=False)
class CorrelationSet:
    """Per-subject symmetric correlation matrices with group labels."""

    matrices: np.ndarray        # (n, N, N)
    subjects: tuple[str, ...]
    groups: tuple[str, ...]

    def __post_init__(self):
        mats = np.asarray(self.matrices, dtype=np.float64)
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
            raise DataError("matrices must be a stack of square matrices")
        if len(self.subjects) != len(mats) or len(self.groups) != len(mats):
            raise DataError("subjects and groups must match the matrix count")
        for k, mat in enumerate(mats):
            if not np.allclose(mat, mat.T, atol=1e-8):
                raise DataError(f"correlation matrix {self.subjects[k]!r} is not symmetric")
            if not np.allclose(np.diag(mat), 1.0, atol=1e-8):
                raise DataError(f"correlation matrix {self.subjects[k]!r} diagonal is not 1")
            off = mat[~np.eye(mat.shape[0], dtype=bool)]
            if np.any(off < -1.0 - 1e-8) or np.any(off > 1.0 + 1e-8):
                raise DataError(f"correlations of {self.subjects[k]!r} outside [-1, 1]")
        mats.setflags(write=False)
        object.__setattr__(self, "matrices", mats)
        object.__setattr__(self, "subjects", tuple(self.subjects))
        object.__setattr__(self, "groups", tuple(self.groups))

    @property
    def n_subjects(self) -> int:
        return len(self.subjects)

    @property
    def n_nodes(self) -> int:
        return self.matrices.shape[1]

    def pooled_offdiagonal(self) -> np.ndarray:
        """Upper-triangle correlations pooled over all subjects."""
        iu = np.triu_indices(self.n_nodes, k=1)
        return np.concatenate([mat[iu] for mat in self.matrices])

    def group_indices(self) -> tuple[np.ndarray, tuple[str, ...]]:
        """0-based group indices in first-appearance order of the labels."""
        names: list[str] = []
        idx = np.empty(self.n_subjects, dtype=np.int32)
        seen: dict[str, int] = {}
        for k, label in enumerate(self.groups):
            if label not in seen:
                seen[label] = len(names)
                names.append(label)
            idx[k] = seen[label]
        return idx, tuple(names)


def threshold_networks(
    cs: CorrelationSet,
    r: float,
    cov: NodeCovariates | None = None,
    absolute: bool = False,
) -> GraphPopulation:
    """Threshold each matrix into a graph: edge iff correlation >= r.

    ``absolute=True`` thresholds |correlation| instead (off by default;
    the standard rule uses signed correlations). When no covariates are
    given, the hemisphere-halves convention with the mirror pairing is
    assumed.
    """
    if not np.isfinite(r):
        raise DataError("threshold must be finite")
    n_nodes = cs.n_nodes
    if cov is None:
        cov = NodeCovariates.hemispheres(n_nodes)
    graphs = []
    for mat in cs.matrices:
        vals = np.abs(mat) if absolute else mat
        adj = (vals >= r).astype(np.uint8)
        np.fill_diagonal(adj, 0)
        graphs.append(Graph(adj, copy=False))
    group, names = cs.group_indices()
    return GraphPopulation(
        graphs=tuple(graphs), group=group, covariates=cov, group_names=names
    )


def solve_threshold_for_degree(cs: CorrelationSet, target_mean_degree: float) -> float:
    """Largest threshold whose pooled mean degree reaches the target.

    Mean degree pools edges over all subjects: 2 * total edges /
    (n_subjects * n_nodes). Ties at the cut are all included, so the
    achieved degree can exceed the target by less than one edge quantum
    (plus ties).
    """
    n_nodes = cs.n_nodes
    if not 0.0 <= target_mean_degree <= n_nodes - 1:
        raise DataError(
            f"target mean degree must lie in [0, {n_nodes - 1}], got {target_mean_degree}"
        )
    pooled = np.sort(cs.pooled_offdiagonal())[::-1]
    # minimum pooled edge count reaching the target
    need = int(np.ceil(target_mean_degree * cs.n_subjects * n_nodes / 2.0 - 1e-12))
    if need <= 0:
        return float(np.nextafter(pooled[0], np.inf))
    if need > len(pooled):
        raise DataError("target mean degree is not achievable")
    return float(pooled[need - 1])


# ---------------------------------------------------------------------------
# Correlation and population file formats
# ---------------------------------------------------------------------------

def load_correlation_set(manifest_path) -> CorrelationSet:
    """Load matrices listed in a manifest CSV with columns subject,path,group.

    Relative matrix paths resolve against the manifest's directory.
    """
    base = os.path.dirname(os.path.abspath(manifest_path))
    subjects: list[str] = []
    groups: list[str] = []
    mats: list[np.ndarray] = []
    with open(manifest_path) as fh:
        reader = csv.DictReader(fh)
        required = {"subject", "path", "group"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise DataError(f"{manifest_path}: manifest needs columns subject,path,group")
        for row in reader:
            path = row["path"]
            if not os.path.isabs(path):
                path = os.path.join(base, path)
            mat = np.loadtxt(path, delimiter=",", ndmin=2)
            subjects.append(row["subject"])
            groups.append(row["group"])
            mats.append(mat)
    if not mats:
        raise DataError(f"{manifest_path}: empty manifest")
    shapes = {m.shape for m in mats}
    if len(shapes) != 1:
        raise DataError("correlation matrices differ in shape")
    return CorrelationSet(np.array(mats), tuple(subjects), tuple(groups))


def save_population(
    pop: GraphPopulation,
    out_dir,
    attribute: str | None = None,
    subjects: tuple[str, ...] | None = None,
) -> str:
    """Write per-subject edge lists plus manifest.csv and covariates.csv.

    Returns the manifest path.
    """
    os.makedirs(out_dir, exist_ok=True)
    n = pop.n_networks
    if subjects is None:
        subjects = tuple(f"subject_{i + 1:03d}" for i in range(n))
    manifest_path = os.path.join(out_dir, "manifest.csv")
    with open(manifest_path, "w") as fh:
        fh.write("subject,path,group\n")
        for i in range(n):
            fname = f"{subjects[i]}.edges"
            write_edge_list(pop.graphs[i], os.path.join(out_dir, fname))
            fh.write(f"{subjects[i]},{fname},{pop.group_names[pop.group[i]]}\n")
    if attribute is None:
        attribute = next(iter(pop.covariates.attributes), None)
    if attribute is not None:
        write_covariates(
            pop.covariates, os.path.join(out_dir, "covariates.csv"), attribute
        )
    return manifest_path


def load_population(
    manifest_path,
    covariates_path=None,
    attribute: str = "label",
) -> GraphPopulation:
    """Load a population saved by :func:`save_population`."""
    base = os.path.dirname(os.path.abspath(manifest_path))
    entries: list[tuple[str, str, str]] = []
    with open(manifest_path) as fh:
        reader = csv.DictReader(fh)
        required = {"subject", "path", "group"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise DataError(f"{manifest_path}: manifest needs columns subject,path,group")
        for row in reader:
            entries.append((row["subject"], row["path"], row["group"]))
    graphs = []
    group_labels = []
    for _, path, label in entries:
        if not os.path.isabs(path):
            path = os.path.join(base, path)
        graphs.append(read_edge_list(path))
        group_labels.append(label)
    if not graphs:
        raise DataError(f"{manifest_path}: empty manifest")

    names: list[str] = []
    seen: dict[str, int] = {}
    group = np.empty(len(graphs), dtype=np.int32)
    for k, label in enumerate(group_labels):
        if label not in seen:
            seen[label] = len(names)
            names.append(label)
        group[k] = seen[label]

    if covariates_path is None:
        default = os.path.join(base, "covariates.csv")
        covariates_path = default if os.path.exists(default) else None
    if covariates_path is not None:
        cov = read_covariates(covariates_path, attribute)
    else:
        cov = NodeCovariates.uniform(graphs[0].n_nodes)
    return GraphPopulation(
        graphs=tuple(graphs), group=group, covariates=cov, group_names=tuple(names)
    )
