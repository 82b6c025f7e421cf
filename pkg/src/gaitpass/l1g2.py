"""Local-first, global-second coding of multi-sensor recordings.

Left- and right-foot triplets are stacked side by side into one 3 x 2T
matrix whose columns are clustered into H local codes; each foot's signal
then becomes a 1-D code sequence under that shared code book, and code
sequences from several subsystems are coupled position-wise into tuple
states.  Further sensors (waist, wrist) get their own code books and join
the coupling as extra tuple components.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .complexity import SymbolSequence, couple_naive
from .hca import (
    ColumnClustering,
    assign_nearest,
    cluster_columns,
    clustering_from_text,
    clustering_to_text,
)
from .ingest import SensorTriplet


@dataclass(frozen=True, eq=False)
class LocalCode:
    """A frozen cluster code book plus where it came from.

    ``window`` is the source-sample range ``[start, stop)`` whose columns
    were fitted (per sensor when several were stacked).
    """

    clustering: ColumnClustering
    source_sensors: tuple[str, ...]
    window: tuple[int, int]
    subsampled: bool = False

    def __post_init__(self) -> None:
        if not self.source_sensors:
            raise ValueError("source_sensors must be nonempty")
        object.__setattr__(
            self, "source_sensors", tuple(str(s) for s in self.source_sensors)
        )
        start, stop = (int(v) for v in self.window)
        if not 0 <= start < stop:
            raise ValueError(f"window [{start}, {stop}) is empty or negative")
        object.__setattr__(self, "window", (start, stop))

    @property
    def h(self) -> int:
        return self.clustering.h

    @property
    def code_book_id(self) -> str:
        """Content hash identifying this code book across artifacts."""
        payload = "|".join(
            [
                self.clustering.linkage,
                str(self.clustering.h),
                ",".join(self.source_sensors),
                " ".join(repr(float(v)) for v in self.clustering.row_mean),
                " ".join(repr(float(v)) for v in self.clustering.row_std),
                " ".join(
                    repr(float(v)) for v in self.clustering.centroids.ravel()
                ),
            ]
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def stack_lr(left: SensorTriplet, right: SensorTriplet) -> np.ndarray:
    """Concatenate two triplets into a 3 x 2T matrix, left block first.

    Axis rows align X/Y/Z by triplet construction; lengths must match.
    """
    if left.n_samples != right.n_samples:
        raise ValueError(
            f"length mismatch: left {left.n_samples}, right {right.n_samples}"
        )
    return np.concatenate([left.values, right.values], axis=1)


def fit_local_code(
    stacked: np.ndarray,
    h: int = 10,
    source_sensors: tuple[str, ...] = ("L", "R"),
    window: tuple[int, int] | None = None,
    linkage: str = "ward",
    standardize: bool = True,
    max_fit_columns: int | None = None,
) -> LocalCode:
    """Cluster the columns of a stacked matrix into an H-state code book.

    ``stacked`` must hold one equal-length block of columns per source
    sensor.  When ``max_fit_columns`` is given and the matrix is wider,
    every k-th column is fitted instead and the rest of the data falls
    back to nearest-centroid encoding.
    """
    stacked = np.asarray(stacked, dtype=float)
    if stacked.ndim != 2:
        raise ValueError("stacked must be a 2-D matrix")
    n_blocks = len(tuple(source_sensors))
    if n_blocks < 1 or stacked.shape[1] % n_blocks != 0:
        raise ValueError(
            f"{stacked.shape[1]} columns do not split into "
            f"{n_blocks} equal sensor blocks"
        )
    block_len = stacked.shape[1] // n_blocks
    if window is None:
        window = (0, block_len)
    elif window[1] - window[0] != block_len:
        raise ValueError(
            f"window {window} does not span the {block_len}-column blocks"
        )

    subsampled = False
    fit_matrix = stacked
    if max_fit_columns is not None and stacked.shape[1] > max_fit_columns:
        stride = math.ceil(stacked.shape[1] / max_fit_columns)
        fit_matrix = stacked[:, ::stride]
        subsampled = True
    clustering = cluster_columns(
        fit_matrix, h, linkage=linkage, standardize=standardize
    )
    return LocalCode(
        clustering=clustering,
        source_sensors=tuple(source_sensors),
        window=window,
        subsampled=subsampled,
    )


def encode_subsystem(code: LocalCode, triplet: SensorTriplet) -> SymbolSequence:
    """Code every column of a triplet by its nearest code-book centroid."""
    labels = assign_nearest(code.clustering, triplet.values)
    return SymbolSequence(
        symbols=labels, alphabet_size=code.h, provenance="hca-cluster"
    )


@dataclass(frozen=True, eq=False)
class CoupledStateSequence:
    """Position-wise tuples of subsystem codes, kept structured."""

    codes: np.ndarray
    subsystem_labels: tuple[str, ...]
    h_per_subsystem: tuple[int, ...]

    def __post_init__(self) -> None:
        codes = np.array(self.codes, dtype=np.int64)
        if codes.ndim != 2 or codes.shape[0] < 1 or codes.shape[1] < 1:
            raise ValueError("codes must be a T x k matrix with T, k >= 1")
        labels = tuple(str(s) for s in self.subsystem_labels)
        sizes = tuple(int(v) for v in self.h_per_subsystem)
        if len(labels) != codes.shape[1] or len(sizes) != codes.shape[1]:
            raise ValueError("one label and one alphabet size per component")
        for j, h in enumerate(sizes):
            if codes[:, j].min() < 0 or codes[:, j].max() >= h:
                raise ValueError(
                    f"component {j} has codes outside [0, {h})"
                )
        codes.flags.writeable = False
        object.__setattr__(self, "codes", codes)
        object.__setattr__(self, "subsystem_labels", labels)
        object.__setattr__(self, "h_per_subsystem", sizes)

    @property
    def n_samples(self) -> int:
        return self.codes.shape[0]

    @property
    def arity(self) -> int:
        return self.codes.shape[1]

    def project(self, j: int) -> SymbolSequence:
        """Recover component j as a plain symbol sequence."""
        return SymbolSequence(
            symbols=self.codes[:, j],
            alphabet_size=self.h_per_subsystem[j],
            provenance="hca-cluster",
        )

    def as_product(self) -> SymbolSequence:
        """Flatten tuples to single symbols over the product alphabet."""
        return couple_naive([self.project(j) for j in range(self.arity)])

    def state_at(self, t: int) -> tuple[int, ...]:
        return tuple(int(v) for v in self.codes[t])


def couple(
    seqs: list[SymbolSequence], labels: list[str]
) -> CoupledStateSequence:
    """Zip equal-length code sequences into a tuple-state sequence."""
    if not seqs:
        raise ValueError("at least one sequence is required")
    if len(labels) != len(seqs):
        raise ValueError("one label per sequence required")
    length = len(seqs[0])
    for seq in seqs[1:]:
        if len(seq) != length:
            raise ValueError(f"length mismatch: {len(seq)} vs {length}")
    return CoupledStateSequence(
        codes=np.column_stack([seq.symbols for seq in seqs]),
        subsystem_labels=tuple(labels),
        h_per_subsystem=tuple(seq.alphabet_size for seq in seqs),
    )


# ---------------------------------------------------------------------------
# persistence: code book file = clustering schema plus provenance lines
# ---------------------------------------------------------------------------

_MAGIC = "gaitpass-localcode v1"


def local_code_to_text(code: LocalCode) -> str:
    lines = [
        _MAGIC,
        "sensors " + " ".join(code.source_sensors),
        f"window {code.window[0]} {code.window[1]}",
        f"subsampled {int(code.subsampled)}",
    ]
    return "\n".join(lines) + "\n" + clustering_to_text(code.clustering)


def local_code_from_text(text: str) -> LocalCode:
    lines = text.splitlines()
    if not lines or lines[0] != _MAGIC:
        raise ValueError(f"not a {_MAGIC!r} file")
    sensors = tuple(lines[1].split()[1:])
    start, stop = (int(v) for v in lines[2].split()[1:3])
    subsampled = bool(int(lines[3].split()[1]))
    clustering = clustering_from_text("\n".join(lines[4:]) + "\n")
    return LocalCode(
        clustering=clustering,
        source_sensors=sensors,
        window=(start, stop),
        subsampled=subsampled,
    )


def save_local_code(code: LocalCode, path: str | Path) -> None:
    Path(path).write_text(local_code_to_text(code))


def load_local_code(path: str | Path) -> LocalCode:
    return local_code_from_text(Path(path).read_text())
