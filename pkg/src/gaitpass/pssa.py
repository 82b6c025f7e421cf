"""Principle system-state analysis over ternary state-vector sequences.

Distinct D-digit states are ranked by pooled frequency; the top N* states
form the principle set.  Recordings are then summarized segment by segment
as occupancy proportions over that set, and subjects are told apart by
small per-subject key subsets whose summed occupancy separates one
subject's segments from everyone else's.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.cluster import hierarchy

from .symbolic import StateVectorSequence


def state_label(state) -> str:
    """Digit string for one state vector, e.g. (1, 2, 1) -> '121'."""
    return "".join(str(int(d)) for d in state)


@dataclass(frozen=True, eq=False)
class SystemStateTable:
    """Distinct states with pooled counts, ranked most frequent first."""

    states: np.ndarray
    frequencies: np.ndarray
    pool_size: int

    def __post_init__(self) -> None:
        states = np.array(self.states, dtype=np.uint8)
        freqs = np.array(self.frequencies, dtype=np.int64)
        if states.ndim != 2 or states.shape[0] < 1:
            raise ValueError("states must be an N x D matrix with N >= 1")
        if freqs.shape != (states.shape[0],) or freqs.min() < 1:
            raise ValueError("one positive count per distinct state required")
        if np.any(np.diff(freqs) > 0):
            raise ValueError("frequencies must be nonincreasing")
        if int(freqs.sum()) != self.pool_size:
            raise ValueError("frequencies must sum to the pool size")
        states.flags.writeable = False
        freqs.flags.writeable = False
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "frequencies", freqs)

    @property
    def n_states(self) -> int:
        return self.states.shape[0]

    @property
    def n_dims(self) -> int:
        return self.states.shape[1]


def build_state_table(seqs: list[StateVectorSequence]) -> SystemStateTable:
    """Pool sequences and rank their distinct states.

    Ranking is by decreasing pooled count; equal counts order
    lexicographically by digit vector.
    """
    if not seqs:
        raise ValueError("at least one sequence is required")
    d = seqs[0].n_dims
    for seq in seqs[1:]:
        if seq.n_dims != d:
            raise ValueError(f"dimension mismatch: {seq.n_dims} vs {d}")
    pooled = np.concatenate([seq.states for seq in seqs], axis=0)
    states, counts = np.unique(pooled, axis=0, return_counts=True)
    # np.unique returns rows in lexicographic order, so a stable sort on
    # descending count keeps the lexicographic tie rule.
    order = np.argsort(-counts, kind="stable")
    return SystemStateTable(
        states=states[order],
        frequencies=counts[order],
        pool_size=pooled.shape[0],
    )


def coverage_curve(
    table: SystemStateTable, denominator: str = "pool"
) -> np.ndarray:
    """Cumulative frequency share of the top N* states, for N* = 1..N.

    The default divides by the pooled sample count, so the curve ends at
    exactly 1.0.  ``denominator="distinct"`` instead divides the cumulative
    counts by the number of distinct states, a literal alternative
    normalization kept for comparability.
    """
    cumulative = np.cumsum(table.frequencies)
    if denominator == "pool":
        return cumulative / float(table.pool_size)
    if denominator == "distinct":
        return cumulative / float(table.n_states)
    raise ValueError("denominator must be 'pool' or 'distinct'")


def select_pss(
    table: SystemStateTable,
    n_states: int | None = None,
    coverage: float | None = None,
) -> np.ndarray:
    """Pick the principle set: top-N* states by rank.

    Give either ``n_states`` directly, or ``coverage`` to take the smallest
    N* whose pooled coverage reaches that fraction.  N* is capped at the
    number of distinct states.
    """
    if (n_states is None) == (coverage is None):
        raise ValueError("give exactly one of n_states or coverage")
    if coverage is not None:
        if not 0.0 < coverage <= 1.0:
            raise ValueError("coverage must lie in (0, 1]")
        curve = coverage_curve(table)
        n_states = int(np.searchsorted(curve, coverage) + 1)
    if n_states < 1:
        raise ValueError("n_states must be >= 1")
    n_states = min(n_states, table.n_states)
    return table.states[:n_states].copy()


def _state_index(pss: np.ndarray) -> dict[bytes, int]:
    return {row.tobytes(): j for j, row in enumerate(np.ascontiguousarray(pss))}


def segment_proportions(
    seq: StateVectorSequence, pss: np.ndarray, segment_length: int
) -> np.ndarray:
    """Occupancy proportions over ``pss`` for each full-length segment.

    The sequence is chopped into floor(T / l) non-overlapping segments of
    ``l = segment_length`` samples; the trailing remainder is dropped.
    Row j of the result is the fraction of segment j's samples spent in
    each principle state, so rows sum to at most 1.
    """
    pss = np.array(pss, dtype=np.uint8)
    if pss.ndim != 2 or pss.shape[1] != seq.n_dims:
        raise ValueError("pss must be N* x D with D matching the sequence")
    if segment_length < 1:
        raise ValueError("segment_length must be >= 1")
    if seq.n_samples < segment_length:
        raise ValueError(
            f"sequence has {seq.n_samples} samples, shorter than one "
            f"segment of {segment_length}"
        )
    index = _state_index(pss)
    states = np.ascontiguousarray(seq.states)
    codes = np.fromiter(
        (index.get(states[t].tobytes(), -1) for t in range(seq.n_samples)),
        dtype=np.int64,
        count=seq.n_samples,
    )
    n_segments = seq.n_samples // segment_length
    rows = np.zeros((n_segments, pss.shape[0]))
    for i in range(n_segments):
        chunk = codes[i * segment_length : (i + 1) * segment_length]
        hits = chunk[chunk >= 0]
        if hits.size:
            rows[i] = np.bincount(hits, minlength=pss.shape[0]) / float(
                segment_length
            )
    return rows


@dataclass(frozen=True, eq=False)
class ProportionMatrix:
    """m x N* occupancy matrix with per-row subject and segment labels."""

    proportions: np.ndarray
    subjects: tuple[str, ...]
    segment_indices: tuple[int, ...]
    pss: np.ndarray
    segment_length: int

    def __post_init__(self) -> None:
        proportions = np.array(self.proportions, dtype=float)
        pss = np.array(self.pss, dtype=np.uint8)
        if proportions.ndim != 2 or proportions.shape[0] < 1:
            raise ValueError("proportions must be m x N* with m >= 1")
        if proportions.shape[1] != pss.shape[0]:
            raise ValueError("one column per principle state required")
        if len(self.subjects) != proportions.shape[0]:
            raise ValueError("one subject label per row required")
        if len(self.segment_indices) != proportions.shape[0]:
            raise ValueError("one segment index per row required")
        if proportions.min() < 0 or np.any(
            proportions.sum(axis=1) > 1.0 + 1e-9
        ):
            raise ValueError("rows must be proportions summing to <= 1")
        if self.segment_length < 1:
            raise ValueError("segment_length must be >= 1")
        proportions.flags.writeable = False
        pss.flags.writeable = False
        object.__setattr__(self, "proportions", proportions)
        object.__setattr__(self, "pss", pss)
        object.__setattr__(self, "subjects", tuple(self.subjects))
        object.__setattr__(
            self, "segment_indices", tuple(int(i) for i in self.segment_indices)
        )

    @property
    def n_rows(self) -> int:
        return self.proportions.shape[0]

    @property
    def n_states(self) -> int:
        return self.proportions.shape[1]

    def subject_rows(self, subject: str) -> np.ndarray:
        mask = np.array([s == subject for s in self.subjects])
        return self.proportions[mask]


def build_proportion_matrix(
    seqs_by_subject: dict[str, StateVectorSequence | list[StateVectorSequence]],
    pss: np.ndarray,
    segment_length: int,
) -> ProportionMatrix:
    """Assemble the occupancy matrix over several subjects' sequences."""
    rows: list[np.ndarray] = []
    subjects: list[str] = []
    indices: list[int] = []
    for subject, value in seqs_by_subject.items():
        seqs = value if isinstance(value, list) else [value]
        counter = 0
        for seq in seqs:
            part = segment_proportions(seq, pss, segment_length)
            for row in part:
                rows.append(row)
                subjects.append(subject)
                indices.append(counter)
                counter += 1
    if not rows:
        raise ValueError("no segments produced; sequences too short?")
    return ProportionMatrix(
        proportions=np.array(rows),
        subjects=tuple(subjects),
        segment_indices=tuple(indices),
        pss=pss,
        segment_length=segment_length,
    )


def _take_rows(sigma: ProportionMatrix, mask: np.ndarray) -> ProportionMatrix:
    return ProportionMatrix(
        proportions=sigma.proportions[mask],
        subjects=tuple(s for s, keep in zip(sigma.subjects, mask) if keep),
        segment_indices=tuple(
            i for i, keep in zip(sigma.segment_indices, mask) if keep
        ),
        pss=sigma.pss,
        segment_length=sigma.segment_length,
    )


def split_alternating(
    sigma: ProportionMatrix,
) -> tuple[ProportionMatrix, ProportionMatrix]:
    """Even-indexed segments train, odd-indexed segments test.

    Alternation happens per subject on the segment index, so both halves
    cover every subject and every part of the recording.
    """
    even = np.array([i % 2 == 0 for i in sigma.segment_indices])
    if not even.any() or even.all():
        raise ValueError("split needs segments on both sides; too few rows")
    return _take_rows(sigma, even), _take_rows(sigma, ~even)


@dataclass(frozen=True, eq=False)
class KeyPssModel:
    """Per-subject key-state sets with firing thresholds and centroids."""

    subjects: tuple[str, ...]
    pss: np.ndarray
    key_sets: dict[str, tuple[int, ...]]
    thresholds: dict[str, float]
    centroids: dict[str, np.ndarray]
    margins: dict[str, float]
    segment_length: int
    training_accuracy: float

    @property
    def n_states(self) -> int:
        return self.pss.shape[0]


def _greedy_keys(
    own: np.ndarray, others: np.ndarray, max_keys: int
) -> tuple[tuple[int, ...], float, float]:
    """Grow a key set maximizing min(own sums) - max(other sums).

    Stops as soon as the margin is positive, or at ``max_keys`` states.
    Returns (key set, threshold, final margin); the threshold is the
    midpoint of the two sums defining the margin.
    """
    n_states = own.shape[1]
    chosen: list[int] = []
    own_sums = np.zeros(own.shape[0])
    other_sums = np.zeros(others.shape[0])
    margin = -np.inf
    available = np.ones(n_states, dtype=bool)
    while len(chosen) < max_keys:
        mins = np.min(own_sums[:, None] + own, axis=0)
        maxs = np.max(other_sums[:, None] + others, axis=0)
        margins = np.where(available, mins - maxs, -np.inf)
        j = int(np.argmax(margins))
        chosen.append(j)
        available[j] = False
        own_sums = own_sums + own[:, j]
        other_sums = other_sums + others[:, j]
        margin = float(np.min(own_sums) - np.max(other_sums))
        if margin > 0:
            break
    threshold = float((np.min(own_sums) + np.max(other_sums)) / 2.0)
    return tuple(chosen), threshold, margin


def train_key_pss(sigma: ProportionMatrix, max_keys: int = 10) -> KeyPssModel:
    """Learn one key-state set per subject from a training matrix.

    For each subject, states are added greedily to maximize the separation
    between the subject's lowest summed occupancy and every other row's
    highest; the firing threshold is the midpoint of that gap.  Needs at
    least two subjects with at least two segments each.
    """
    subjects = tuple(dict.fromkeys(sigma.subjects))
    if len(subjects) < 2:
        raise ValueError("training needs at least two subjects")
    counts = {s: 0 for s in subjects}
    for s in sigma.subjects:
        counts[s] += 1
    thin = [s for s, c in counts.items() if c < 2]
    if thin:
        raise ValueError(f"subjects with fewer than two segments: {thin}")

    key_sets: dict[str, tuple[int, ...]] = {}
    thresholds: dict[str, float] = {}
    centroids: dict[str, np.ndarray] = {}
    margins: dict[str, float] = {}
    mask_by_subject = {
        s: np.array([row == s for row in sigma.subjects]) for s in subjects
    }
    for subject in subjects:
        mask = mask_by_subject[subject]
        own = sigma.proportions[mask]
        others = sigma.proportions[~mask]
        keys, threshold, margin = _greedy_keys(own, others, max_keys)
        key_sets[subject] = keys
        thresholds[subject] = threshold
        margins[subject] = margin
        centroids[subject] = own.mean(axis=0)

    model = KeyPssModel(
        subjects=subjects,
        pss=sigma.pss,
        key_sets=key_sets,
        thresholds=thresholds,
        centroids=centroids,
        margins=margins,
        segment_length=sigma.segment_length,
        training_accuracy=0.0,
    )
    return replace(model, training_accuracy=classification_accuracy(model, sigma))


@dataclass(frozen=True)
class ClassificationResult:
    """Outcome for one segment: chosen subject plus the score breakdown."""

    subject_id: str
    fallback: bool
    scores: dict[str, float]


def classify_segment(
    model: KeyPssModel, proportions: np.ndarray
) -> ClassificationResult:
    """Attribute one occupancy row to a subject.

    Each subject's rule fires when the summed occupancy over its key set
    exceeds its threshold; among firing rules the largest relative margin
    wins.  When no rule fires, the nearest training centroid (Euclidean,
    over the full row) decides and ``fallback`` is set.
    """
    proportions = np.asarray(proportions, dtype=float).ravel()
    if proportions.shape[0] != model.n_states:
        raise ValueError(
            f"row has {proportions.shape[0]} states, model has {model.n_states}"
        )
    scores: dict[str, float] = {}
    fired: list[tuple[float, str]] = []
    for subject in model.subjects:
        total = float(proportions[list(model.key_sets[subject])].sum())
        threshold = model.thresholds[subject]
        rel = (total - threshold) / max(abs(threshold), 1e-12)
        scores[subject] = rel
        if total > threshold:
            fired.append((rel, subject))
    if fired:
        best = max(fired, key=lambda pair: pair[0])
        return ClassificationResult(
            subject_id=best[1], fallback=False, scores=scores
        )
    dists = {
        subject: float(np.linalg.norm(proportions - model.centroids[subject]))
        for subject in model.subjects
    }
    best_subject = min(model.subjects, key=lambda s: dists[s])
    return ClassificationResult(
        subject_id=best_subject, fallback=True, scores=scores
    )


def classify_matrix(
    model: KeyPssModel, sigma: ProportionMatrix
) -> list[ClassificationResult]:
    return [classify_segment(model, row) for row in sigma.proportions]


def classification_accuracy(model: KeyPssModel, sigma: ProportionMatrix) -> float:
    """Fraction of rows attributed to their labeled subject."""
    results = classify_matrix(model, sigma)
    correct = sum(
        1
        for result, truth in zip(results, sigma.subjects)
        if result.subject_id == truth
    )
    return correct / float(sigma.n_rows)


def cluster_sigma(
    sigma: ProportionMatrix, linkage: str = "average"
) -> tuple[np.ndarray, np.ndarray]:
    """Dendrogram leaf orders for the rows and columns of the matrix.

    Returns ``(row_order, col_order)`` as permutations; used to reorder
    the matrix before rendering so similar segments sit together.
    """
    if sigma.n_rows < 2 or sigma.n_states < 2:
        raise ValueError("clustering needs at least a 2 x 2 matrix")
    row_z = hierarchy.linkage(sigma.proportions, method=linkage)
    col_z = hierarchy.linkage(sigma.proportions.T, method=linkage)
    return hierarchy.leaves_list(row_z), hierarchy.leaves_list(col_z)


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def sigma_to_tsv(sigma: ProportionMatrix) -> str:
    """Tab-separated export: subject, segment, then one column per state."""
    header = ["subject", "segment"] + [state_label(s) for s in sigma.pss]
    lines = ["\t".join(header)]
    for subject, index, row in zip(
        sigma.subjects, sigma.segment_indices, sigma.proportions
    ):
        lines.append(
            "\t".join([subject, str(index)] + [repr(float(v)) for v in row])
        )
    return "\n".join(lines) + "\n"


_MODEL_MAGIC = "gaitpass-keypss v1"


def model_to_text(model: KeyPssModel) -> str:
    lines = [
        _MODEL_MAGIC,
        f"segment_length {model.segment_length}",
        f"training_accuracy {repr(float(model.training_accuracy))}",
        f"states {model.n_states} {model.pss.shape[1]}",
    ]
    for row in model.pss:
        lines.append(state_label(row))
    lines.append(f"subjects {len(model.subjects)}")
    for subject in model.subjects:
        keys = " ".join(str(k) for k in model.key_sets[subject])
        lines.append(f"subject {subject}")
        lines.append(f"keys {keys}")
        lines.append(f"threshold {repr(model.thresholds[subject])}")
        lines.append(f"margin {repr(model.margins[subject])}")
        lines.append(
            "centroid " + " ".join(repr(float(v)) for v in model.centroids[subject])
        )
    return "\n".join(lines) + "\n"


def model_from_text(text: str) -> KeyPssModel:
    lines = text.splitlines()
    if not lines or lines[0] != _MODEL_MAGIC:
        raise ValueError(f"not a {_MODEL_MAGIC!r} file")
    segment_length = int(lines[1].split()[1])
    accuracy = float(lines[2].split()[1])
    n_states, d = (int(v) for v in lines[3].split()[1:3])
    pss = np.array(
        [[int(ch) for ch in lines[4 + i]] for i in range(n_states)],
        dtype=np.uint8,
    ).reshape(n_states, d)
    at = 4 + n_states
    n_subjects = int(lines[at].split()[1])
    at += 1
    subjects: list[str] = []
    key_sets: dict[str, tuple[int, ...]] = {}
    thresholds: dict[str, float] = {}
    margins: dict[str, float] = {}
    centroids: dict[str, np.ndarray] = {}
    for _ in range(n_subjects):
        subject = lines[at].split(" ", 1)[1]
        keys = tuple(int(v) for v in lines[at + 1].split()[1:])
        thresholds[subject] = float(lines[at + 2].split()[1])
        margins[subject] = float(lines[at + 3].split()[1])
        centroids[subject] = np.array(
            [float(v) for v in lines[at + 4].split()[1:]]
        )
        subjects.append(subject)
        key_sets[subject] = keys
        at += 5
    return KeyPssModel(
        subjects=tuple(subjects),
        pss=pss,
        key_sets=key_sets,
        thresholds=thresholds,
        centroids=centroids,
        margins=margins,
        segment_length=segment_length,
        training_accuracy=accuracy,
    )


def save_model(model: KeyPssModel, path: str | Path) -> None:
    Path(path).write_text(model_to_text(model))


def load_model(path: str | Path) -> KeyPssModel:
    return model_from_text(Path(path).read_text())
