"""Agglomerative clustering of the columns of a signal matrix.

Columns (time points, as d-dimensional readings) are merged bottom-up under
a chosen linkage rule; cutting the merge tree where exactly H clusters
remain yields the cluster vocabulary used as a data-driven code book.
Cluster ids are relabeled so id 0 is the most populous cluster.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.cluster import hierarchy

LINKAGES = ("ward", "complete", "average")

# Hard ceiling on the number of columns in one fit; the pairwise distance
# matrix is quadratic in this, so longer windows must be subsampled and
# backfilled by nearest-centroid assignment.
MAX_FIT_COLUMNS = 65536


@dataclass(frozen=True, eq=False)
class ColumnClustering:
    """Result of one column-clustering fit.

    ``assignments`` maps each fitted column to a cluster id in [0, h);
    ``centroids`` are raw-space per-cluster member means (h x d);
    ``merges`` is the (N - 1) x 4 merge history (child, child, height,
    size); ``row_mean``/``row_std`` record the per-row standardization
    applied before clustering (zeros/ones when standardization was off).
    """

    assignments: np.ndarray
    h: int
    centroids: np.ndarray
    sizes: np.ndarray
    merges: np.ndarray
    linkage: str
    row_mean: np.ndarray
    row_std: np.ndarray

    def __post_init__(self) -> None:
        if self.linkage not in LINKAGES:
            raise ValueError(f"linkage {self.linkage!r} not in {LINKAGES}")
        assignments = np.array(self.assignments, dtype=np.int64)
        centroids = np.array(self.centroids, dtype=float)
        sizes = np.array(self.sizes, dtype=np.int64)
        merges = np.array(self.merges, dtype=float)
        row_mean = np.array(self.row_mean, dtype=float)
        row_std = np.array(self.row_std, dtype=float)
        if not 1 <= self.h <= assignments.shape[0]:
            raise ValueError("need 1 <= h <= number of fitted columns")
        if centroids.shape != (self.h, row_mean.shape[0]):
            raise ValueError("centroids must be h x d")
        if sizes.shape != (self.h,) or sizes.min() < 1:
            raise ValueError("every cluster id must own at least one column")
        if int(sizes.sum()) != assignments.shape[0]:
            raise ValueError("cluster sizes must sum to the column count")
        if assignments.min() < 0 or assignments.max() >= self.h:
            raise ValueError("assignments must lie in [0, h)")
        if merges.shape != (assignments.shape[0] - 1, 4):
            raise ValueError("merges must be (N - 1) x 4")
        for arr in (assignments, centroids, sizes, merges, row_mean, row_std):
            arr.flags.writeable = False
        object.__setattr__(self, "assignments", assignments)
        object.__setattr__(self, "centroids", centroids)
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "merges", merges)
        object.__setattr__(self, "row_mean", row_mean)
        object.__setattr__(self, "row_std", row_std)

    @property
    def n_columns(self) -> int:
        return self.assignments.shape[0]

    @property
    def n_dims(self) -> int:
        return self.centroids.shape[1]


def cluster_columns(
    matrix: np.ndarray,
    h: int,
    linkage: str = "ward",
    standardize: bool = True,
) -> ColumnClustering:
    """Fit an H-cluster column clustering of a d x N matrix.

    Rows are optionally standardized to zero mean and unit variance before
    distances are computed (constant rows keep unit scale); the merge tree
    is cut where exactly ``h`` clusters remain.  Cluster ids come out in
    decreasing size order, ties broken by earliest member column.
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] < 1 or matrix.shape[1] < 1:
        raise ValueError("matrix must be d x N with d, N >= 1")
    if not np.all(np.isfinite(matrix)):
        raise ValueError("matrix contains NaN or Inf")
    d, n = matrix.shape
    if n > MAX_FIT_COLUMNS:
        raise ValueError(
            f"{n} columns exceeds the fit ceiling of {MAX_FIT_COLUMNS}; "
            "subsample and backfill with assign_nearest"
        )
    if not 1 <= h <= n:
        raise ValueError(f"need 1 <= h <= {n}, got h={h}")
    if linkage not in LINKAGES:
        raise ValueError(f"linkage {linkage!r} not in {LINKAGES}")

    if standardize:
        row_mean = matrix.mean(axis=1)
        row_std = matrix.std(axis=1)
        row_std = np.where(row_std > 0, row_std, 1.0)
    else:
        row_mean = np.zeros(d)
        row_std = np.ones(d)
    observations = ((matrix - row_mean[:, None]) / row_std[:, None]).T

    if n == 1:
        merges = np.empty((0, 4))
        raw_labels = np.zeros(1, dtype=np.int64)
    else:
        merges = hierarchy.linkage(observations, method=linkage)
        raw_labels = hierarchy.cut_tree(merges, n_clusters=h).ravel()

    # Relabel so cluster 0 is the largest; ties go to the cluster whose
    # first member column appears earliest.
    ids, first_seen, counts = np.unique(
        raw_labels, return_index=True, return_counts=True
    )
    order = sorted(range(len(ids)), key=lambda k: (-counts[k], first_seen[k]))
    remap = np.empty(len(ids), dtype=np.int64)
    for new_id, k in enumerate(order):
        remap[ids[k]] = new_id
    assignments = remap[raw_labels]

    centroids = np.zeros((h, d))
    sizes = np.zeros(h, dtype=np.int64)
    for cid in range(h):
        members = assignments == cid
        sizes[cid] = int(members.sum())
        centroids[cid] = matrix[:, members].mean(axis=1)

    return ColumnClustering(
        assignments=assignments,
        h=h,
        centroids=centroids,
        sizes=sizes,
        merges=merges,
        linkage=linkage,
        row_mean=row_mean,
        row_std=row_std,
    )


def assign_nearest(clustering: ColumnClustering, columns: np.ndarray) -> np.ndarray:
    """Label new d x M columns by nearest centroid in the fit space.

    Distances are Euclidean after applying the stored row standardization;
    ties resolve to the lower cluster id.
    """
    columns = np.asarray(columns, dtype=float)
    if columns.ndim == 1:
        columns = columns[:, None]
    if columns.shape[0] != clustering.n_dims:
        raise ValueError(
            f"columns have {columns.shape[0]} dims, clustering has "
            f"{clustering.n_dims}"
        )
    scale = clustering.row_std
    scaled = (columns - clustering.row_mean[:, None]) / scale[:, None]
    scaled_centroids = (
        clustering.centroids - clustering.row_mean[None, :]
    ) / scale[None, :]
    # squared distances via the expansion ||x||^2 - 2 x.c + ||c||^2
    cross = scaled_centroids @ scaled
    norms = np.sum(scaled_centroids**2, axis=1)[:, None]
    return np.argmin(norms - 2.0 * cross, axis=0).astype(np.int64)


# ---------------------------------------------------------------------------
# persistence (versioned plain-text schema)
# ---------------------------------------------------------------------------

_MAGIC = "gaitpass-codebook v1"


def _fmt(values) -> str:
    return " ".join(repr(float(v)) for v in values)


def clustering_to_text(clustering: ColumnClustering) -> str:
    lines = [
        _MAGIC,
        f"linkage {clustering.linkage}",
        f"h {clustering.h}",
        f"dims {clustering.n_dims}",
        f"columns {clustering.n_columns}",
        "row_mean " + _fmt(clustering.row_mean),
        "row_std " + _fmt(clustering.row_std),
        "sizes " + " ".join(str(int(s)) for s in clustering.sizes),
        "centroids",
    ]
    for row in clustering.centroids:
        lines.append(_fmt(row))
    lines.append(f"merges {clustering.merges.shape[0]}")
    for row in clustering.merges:
        lines.append(_fmt(row))
    lines.append("assignments")
    flat = [str(int(a)) for a in clustering.assignments]
    for i in range(0, len(flat), 32):
        lines.append(" ".join(flat[i : i + 32]))
    return "\n".join(lines) + "\n"


def clustering_from_text(text: str) -> ColumnClustering:
    lines = text.splitlines()
    if not lines or lines[0] != _MAGIC:
        raise ValueError(f"not a {_MAGIC!r} file")

    def field(idx: int, key: str) -> list[str]:
        parts = lines[idx].split()
        if not parts or parts[0] != key:
            raise ValueError(f"expected {key!r} on line {idx + 1}")
        return parts[1:]

    linkage = field(1, "linkage")[0]
    h = int(field(2, "h")[0])
    d = int(field(3, "dims")[0])
    n = int(field(4, "columns")[0])
    row_mean = np.array([float(v) for v in field(5, "row_mean")])
    row_std = np.array([float(v) for v in field(6, "row_std")])
    sizes = np.array([int(v) for v in field(7, "sizes")])
    if lines[8] != "centroids":
        raise ValueError("expected 'centroids' on line 9")
    at = 9
    centroids = np.array(
        [[float(v) for v in lines[at + i].split()] for i in range(h)]
    ).reshape(h, d)
    at += h
    n_merges = int(field(at, "merges")[0])
    at += 1
    merges = np.array(
        [[float(v) for v in lines[at + i].split()] for i in range(n_merges)]
    ).reshape(n_merges, 4)
    at += n_merges
    if lines[at] != "assignments":
        raise ValueError(f"expected 'assignments' on line {at + 1}")
    at += 1
    flat: list[int] = []
    for line in lines[at:]:
        flat.extend(int(v) for v in line.split())
    assignments = np.array(flat, dtype=np.int64)
    if assignments.shape[0] != n:
        raise ValueError(
            f"assignment count {assignments.shape[0]} does not match "
            f"declared column count {n}"
        )
    return ColumnClustering(
        assignments=assignments,
        h=h,
        centroids=centroids,
        sizes=sizes,
        merges=merges,
        linkage=linkage,
        row_mean=row_mean,
        row_std=row_std,
    )


def save_clustering(clustering: ColumnClustering, path: str | Path) -> None:
    Path(path).write_text(clustering_to_text(clustering))


def load_clustering(path: str | Path) -> ColumnClustering:
    return clustering_from_text(Path(path).read_text())
