"""Run statistics and landmark partition of coupled state sequences.

A run is a maximal stretch over which one tuple state repeats.  The
landmark is the state whose run sizes and recurrence times (gaps between
successive run starts) are jointly most regular; its run starts slice the
trajectory into rhythmic cycles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .l1g2 import CoupledStateSequence


def _sample_variance(values: np.ndarray) -> float:
    # one observation carries no spread information; call it zero rather
    # than leaving the n-1 divisor undefined
    if values.shape[0] < 2:
        return 0.0
    return float(np.var(values, ddof=1))


@dataclass(frozen=True, eq=False)
class StateRuns:
    """All runs of one state: where they start, how long, how far apart."""

    state: tuple[int, ...]
    run_starts: np.ndarray
    run_sizes: np.ndarray
    recurrence_times: np.ndarray
    size_variance: float
    recurrence_variance: float

    @property
    def run_count(self) -> int:
        return self.run_starts.shape[0]


@dataclass(frozen=True, eq=False)
class RunStatistics:
    """Run-length encoding of a sequence, grouped per distinct state."""

    per_state: dict[tuple[int, ...], StateRuns]
    run_order: tuple[tuple[int, ...], ...]
    run_starts: np.ndarray
    run_sizes: np.ndarray
    length: int

    def expand(self) -> np.ndarray:
        """Rebuild the T x k code matrix from the run encoding."""
        arity = len(self.run_order[0])
        codes = np.empty((self.length, arity), dtype=np.int64)
        for state, start, size in zip(
            self.run_order, self.run_starts, self.run_sizes
        ):
            codes[start : start + size] = state
        return codes


def run_statistics(seq: CoupledStateSequence) -> RunStatistics:
    """Run-length encode a sequence and compute per-state regularity.

    Variances are sample variances (n - 1 divisor); a state with fewer
    than two runs has no recurrence times and gets +inf as its recurrence
    variance so it can never win the landmark selection.
    """
    if seq.n_samples < 2:
        raise ValueError("run statistics need a sequence of length >= 2")
    codes = seq.codes
    changed = np.any(codes[1:] != codes[:-1], axis=1)
    starts = np.concatenate(([0], np.flatnonzero(changed) + 1))
    sizes = np.diff(np.concatenate((starts, [seq.n_samples])))
    order = tuple(tuple(int(v) for v in codes[s]) for s in starts)

    grouped: dict[tuple[int, ...], list[int]] = {}
    for idx, state in enumerate(order):
        grouped.setdefault(state, []).append(idx)

    per_state: dict[tuple[int, ...], StateRuns] = {}
    for state, indices in grouped.items():
        s_starts = starts[indices]
        s_sizes = sizes[indices]
        recurrence = np.diff(s_starts)
        per_state[state] = StateRuns(
            state=state,
            run_starts=s_starts,
            run_sizes=s_sizes,
            recurrence_times=recurrence,
            size_variance=_sample_variance(s_sizes),
            recurrence_variance=(
                math.inf if len(indices) < 2 else _sample_variance(recurrence)
            ),
        )
    return RunStatistics(
        per_state=per_state,
        run_order=order,
        run_starts=starts,
        run_sizes=sizes,
        length=seq.n_samples,
    )


def select_landmark(
    stats: RunStatistics,
    min_runs: int = 5,
    recurrence_weight: float = 1.0,
) -> tuple[int, ...]:
    """Pick the state minimizing size variance + recurrence variance.

    Only states with at least ``min_runs`` runs compete.  Ties go to the
    state with more runs, then to the lexicographically smaller tuple.
    ``recurrence_weight`` scales the recurrence term (default 1, the two
    terms summed as-is in squared-sample units).
    """
    eligible = [
        runs for runs in stats.per_state.values() if runs.run_count >= min_runs
    ]
    if not eligible:
        raise ValueError(
            f"no state has >= {min_runs} runs; sequence too short or "
            "min_runs too strict"
        )
    best = min(
        eligible,
        key=lambda runs: (
            runs.size_variance + recurrence_weight * runs.recurrence_variance,
            -runs.run_count,
            runs.state,
        ),
    )
    return best.state


@dataclass(frozen=True, eq=False)
class CyclePartition:
    """Trajectory sliced at every run start of the landmark state."""

    landmark_state: tuple[int, ...]
    boundaries: np.ndarray
    cycles: tuple[tuple[int, int], ...]
    head: tuple[int, int]
    tail: tuple[int, int]
    period_mean: float
    period_sd: float
    length: int

    def __post_init__(self) -> None:
        boundaries = np.array(self.boundaries, dtype=np.int64)
        if boundaries.shape[0] < 2 or np.any(np.diff(boundaries) <= 0):
            raise ValueError("boundaries must be >= 2 strictly increasing indices")
        expected = tuple(
            (int(boundaries[i]), int(boundaries[i + 1]))
            for i in range(boundaries.shape[0] - 1)
        )
        if tuple(self.cycles) != expected:
            raise ValueError("cycles must tile [first boundary, last boundary)")
        boundaries.flags.writeable = False
        object.__setattr__(self, "boundaries", boundaries)
        object.__setattr__(self, "cycles", expected)

    @property
    def n_cycles(self) -> int:
        return len(self.cycles)

    @property
    def cycle_lengths(self) -> np.ndarray:
        return np.diff(self.boundaries)


def partition_cycles(
    seq: CoupledStateSequence, landmark: tuple[int, ...]
) -> CyclePartition:
    """Cut the sequence at each run start of ``landmark``.

    Samples before the first start and from the last start onward are not
    cycles; they are reported as head and tail remainders.
    """
    landmark = tuple(int(v) for v in landmark)
    if len(landmark) != seq.arity:
        raise ValueError(
            f"landmark arity {len(landmark)} does not match sequence "
            f"arity {seq.arity}"
        )
    stats = run_statistics(seq)
    runs = stats.per_state.get(landmark)
    if runs is None or runs.run_count < 2:
        raise ValueError(
            f"landmark {landmark} occurs as {0 if runs is None else runs.run_count} "
            "run starts; need at least 2"
        )
    boundaries = runs.run_starts
    lengths = np.diff(boundaries)
    return CyclePartition(
        landmark_state=landmark,
        boundaries=boundaries,
        cycles=tuple(
            (int(boundaries[i]), int(boundaries[i + 1]))
            for i in range(boundaries.shape[0] - 1)
        ),
        head=(0, int(boundaries[0])),
        tail=(int(boundaries[-1]), seq.n_samples),
        period_mean=float(np.mean(lengths)),
        period_sd=math.sqrt(_sample_variance(lengths)),
        length=seq.n_samples,
    )


def cycles_to_tsv(partition: CyclePartition) -> str:
    """Cycle table export: index, start sample, length in samples."""
    lines = ["cycle\tstart\tlength"]
    for idx, (start, end) in enumerate(partition.cycles):
        lines.append(f"{idx}\t{start}\t{end - start}")
    return "\n".join(lines) + "\n"
