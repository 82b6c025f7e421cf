"""Loading and validation of multi-sensor accelerometer recordings.

Two dataset text layouts are supported (per-subject plain-text exports with
one sample per row), plus a synthetic walker generator whose ground-truth
cycle boundaries are returned alongside the signal.  All loaders produce a
:class:`TimeSeriesFrame`: a dense D x T matrix of axis readings with one
``(sensor, axis)`` label per row.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError

AXES = ("X", "Y", "Z")

# Column layout of a headerless MAREA text export: four sensors, three axes
# each, in this fixed order.  A header row naming channels overrides it.
MAREA_SENSORS = ("LF", "RF", "Waist", "Wrist")
MAREA_SAMPLE_RATE_HZ = 128.0
MAREA_LAYOUT = {
    sensor: {axis: 3 * i + j for j, axis in enumerate(AXES)}
    for i, sensor in enumerate(MAREA_SENSORS)
}

# HuGaDB files carry a header; only the six accelerometer triples are kept.
HUGADB_SENSORS = ("rf", "rs", "rt", "lf", "ls", "lt")
HUGADB_SAMPLE_RATE_HZ = 60.0


@dataclass(frozen=True, eq=False)
class TimeSeriesFrame:
    """A D x T acceleration matrix with per-row ``(sensor, axis)`` labels."""

    values: np.ndarray
    channels: tuple[tuple[str, str], ...]
    sample_rate_hz: float
    subject_id: str
    activity: str = ""

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise ValueError("values must be a D x T matrix with D >= 1, T >= 1")
        if not np.all(np.isfinite(values)):
            raise ValueError("values contain NaN or Inf")
        channels = tuple((str(s), str(a)) for s, a in self.channels)
        if len(channels) != values.shape[0]:
            raise ValueError(
                f"{len(channels)} channel labels for {values.shape[0]} rows"
            )
        if len(set(channels)) != len(channels):
            raise ValueError("duplicate (sensor, axis) channel label")
        for sensor, axis in channels:
            if axis not in AXES:
                raise ValueError(f"unknown axis {axis!r} for sensor {sensor!r}")
        if not self.sample_rate_hz > 0:
            raise ValueError("sample_rate_hz must be positive")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "channels", channels)

    @property
    def n_channels(self) -> int:
        return self.values.shape[0]

    @property
    def n_samples(self) -> int:
        return self.values.shape[1]

    def sensor_names(self) -> tuple[str, ...]:
        """Distinct sensor names, in first-appearance order."""
        seen: list[str] = []
        for sensor, _ in self.channels:
            if sensor not in seen:
                seen.append(sensor)
        return tuple(seen)

    def sensor(self, name: str) -> "SensorTriplet":
        """Extract one sensor's X, Y, Z rows as a triplet view."""
        rows = {axis: i for i, (s, axis) in enumerate(self.channels) if s == name}
        if not rows:
            raise KeyError(f"frame has no sensor {name!r}")
        missing = [a for a in AXES if a not in rows]
        if missing:
            raise ValueError(f"sensor {name!r} lacks axes {missing}")
        sub = TimeSeriesFrame(
            values=self.values[[rows[a] for a in AXES], :],
            channels=tuple((name, a) for a in AXES),
            sample_rate_hz=self.sample_rate_hz,
            subject_id=self.subject_id,
            activity=self.activity,
        )
        return SensorTriplet(sub)

    def window(self, start: int, stop: int) -> "TimeSeriesFrame":
        """Slice samples ``[start, stop)`` into a new frame."""
        if not 0 <= start < stop <= self.n_samples:
            raise ValueError(
                f"window [{start}, {stop}) outside 0..{self.n_samples}"
            )
        return TimeSeriesFrame(
            values=self.values[:, start:stop],
            channels=self.channels,
            sample_rate_hz=self.sample_rate_hz,
            subject_id=self.subject_id,
            activity=self.activity,
        )


@dataclass(frozen=True, eq=False)
class SensorTriplet:
    """One sensor's three axis rows, normalized to X, Y, Z order."""

    frame: TimeSeriesFrame

    def __post_init__(self) -> None:
        if self.frame.n_channels != 3:
            raise ValueError("a sensor triplet needs exactly three channels")
        sensors = {s for s, _ in self.frame.channels}
        if len(sensors) != 1:
            raise ValueError(f"triplet mixes sensors {sorted(sensors)}")
        axes = tuple(a for _, a in self.frame.channels)
        if axes != AXES:
            raise ValueError(f"triplet axes are {axes}, expected {AXES}")

    @property
    def values(self) -> np.ndarray:
        """3 x T matrix, rows in X, Y, Z order."""
        return self.frame.values

    @property
    def name(self) -> str:
        return self.frame.channels[0][0]

    @property
    def n_samples(self) -> int:
        return self.frame.n_samples


# ---------------------------------------------------------------------------
# text-table parsing shared by both dataset loaders
# ---------------------------------------------------------------------------

def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def _read_table(path: Path) -> tuple[list[str] | None, np.ndarray]:
    """Parse a whitespace- or comma-delimited numeric table.

    Blank lines and ``#`` comment lines are skipped.  If the first content
    row contains any non-numeric token it is taken as a header.  Returns
    ``(header_tokens_or_None, rows_as_2d_float_array)``.  Malformed content
    raises :class:`DataError` naming the offending line of the file.
    """
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc

    header: list[str] | None = None
    rows: list[list[float]] = []
    width = -1
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        tokens = stripped.replace(",", " ").split()
        if header is None and not rows and any(not _is_number(t) for t in tokens):
            header = tokens
            continue
        values = []
        for col, token in enumerate(tokens, start=1):
            if not _is_number(token):
                raise DataError(
                    f"{path}: line {lineno}, column {col}: "
                    f"non-numeric value {token!r}"
                )
            values.append(float(token))
        if width == -1:
            width = len(values)
        elif len(values) != width:
            raise DataError(
                f"{path}: line {lineno}: {len(values)} columns, expected {width}"
            )
        rows.append(values)
    if not rows:
        raise DataError(f"{path}: no data rows")
    data = np.array(rows, dtype=float)
    if not np.all(np.isfinite(data)):
        bad = int(np.argwhere(~np.all(np.isfinite(data), axis=1))[0, 0])
        raise DataError(f"{path}: non-finite value in data row {bad + 1}")
    return header, data


def _split_channel_token(token: str) -> tuple[str, str] | None:
    """``LF_X`` -> ``("LF", "X")``; None when the token has no axis suffix."""
    if "_" not in token:
        return None
    sensor, _, axis = token.rpartition("_")
    axis = axis.upper()
    if axis not in AXES or not sensor:
        return None
    return sensor, axis


def load_marea(
    path: str | Path,
    subject_id: str,
    sensors: tuple[str, ...] = MAREA_SENSORS,
    activity: str = "",
) -> TimeSeriesFrame:
    """Load a per-subject MAREA text export.

    The file is a 12-column table (LF, RF, Waist, Wrist; X, Y, Z each, at
    128 Hz) or any superset/reordering described by a one-line header of
    ``<Sensor>_<Axis>`` names.  ``sensors`` selects which triplets to keep
    and fixes the row order of the result.
    """
    path = Path(path)
    sensors = tuple(sensors)
    if not sensors:
        raise DataError("at least one sensor must be requested")
    unknown = [s for s in sensors if s not in MAREA_SENSORS]
    if unknown:
        raise DataError(
            f"unknown MAREA sensors {unknown}; available: {list(MAREA_SENSORS)}"
        )
    header, data = _read_table(path)

    if header is not None:
        layout: dict[str, dict[str, int]] = {}
        for idx, token in enumerate(header):
            parsed = _split_channel_token(token)
            if parsed is None:
                continue
            sensor, axis = parsed
            layout.setdefault(sensor, {})[axis] = idx
    else:
        layout = MAREA_LAYOUT
        if data.shape[1] < 12:
            raise DataError(
                f"{path}: headerless MAREA export needs 12 columns, "
                f"found {data.shape[1]}"
            )

    rows = []
    channels = []
    for sensor in sensors:
        axis_map = layout.get(sensor, {})
        missing = [a for a in AXES if a not in axis_map]
        if missing:
            raise DataError(f"{path}: sensor {sensor!r} lacks axes {missing}")
        for axis in AXES:
            rows.append(data[:, axis_map[axis]])
            channels.append((sensor, axis))
    return TimeSeriesFrame(
        values=np.array(rows),
        channels=tuple(channels),
        sample_rate_hz=MAREA_SAMPLE_RATE_HZ,
        subject_id=subject_id,
        activity=activity,
    )


def load_hugadb(
    path: str | Path,
    subject_id: str,
    sample_rate_hz: float = HUGADB_SAMPLE_RATE_HZ,
    activity: str = "",
) -> TimeSeriesFrame:
    """Load a HuGaDB v1 text file, keeping the six accelerometer triplets.

    The file must carry a header row; accelerometer columns are recognized
    by ``acc_<location>_<axis>`` names (case-insensitive), with locations
    rf, rs, rt, lf, ls, lt.  Gyroscope and EMG columns are ignored.  All
    18 accelerometer channels must be present.
    """
    path = Path(path)
    header, data = _read_table(path)
    if header is None:
        raise DataError(f"{path}: HuGaDB file lacks the expected header row")

    index: dict[tuple[str, str], int] = {}
    for idx, token in enumerate(header):
        parts = token.lower().split("_")
        if len(parts) < 3 or parts[0] != "acc":
            continue
        location, axis = parts[1], parts[2].upper()
        if location in HUGADB_SENSORS and axis in AXES:
            index[(location, axis)] = idx

    missing = [
        f"acc_{loc}_{axis.lower()}"
        for loc in HUGADB_SENSORS
        for axis in AXES
        if (loc, axis) not in index
    ]
    if missing:
        raise DataError(f"{path}: missing accelerometer columns {missing}")

    rows = []
    channels = []
    for loc in HUGADB_SENSORS:
        for axis in AXES:
            rows.append(data[:, index[(loc, axis)]])
            channels.append((loc, axis))
    return TimeSeriesFrame(
        values=np.array(rows),
        channels=tuple(channels),
        sample_rate_hz=sample_rate_hz,
        subject_id=subject_id,
        activity=activity,
    )


# ---------------------------------------------------------------------------
# synthetic walker
# ---------------------------------------------------------------------------

MARKER_LEVEL = 8.0


@dataclass(frozen=True, eq=False)
class SyntheticWalk:
    """A generated walk plus the ground truth that produced it.

    ``boundaries`` holds C + 2 fenceposts: the start of each of the C
    cycles, the end of the last cycle, and the total length T (the final
    stretch is a closing marker stub).  ``cycle_lengths`` are the C true
    periods.
    """

    frame: TimeSeriesFrame
    boundaries: np.ndarray
    cycle_lengths: np.ndarray
    marker_len: int

    @property
    def n_cycles(self) -> int:
        return len(self.cycle_lengths)

    @property
    def cycle_starts(self) -> np.ndarray:
        return self.boundaries[:-2]

    @property
    def marker_onsets(self) -> np.ndarray:
        """Starts of every marker burst, including the closing stub."""
        return self.boundaries[:-1]


def _phase_levels(n_sensors: int, n_phases: int) -> np.ndarray:
    """Well-separated 3-vector plateau levels, one per (sensor, phase)."""
    levels = np.zeros((n_sensors, n_phases, 3))
    for s in range(n_sensors):
        for p in range(n_phases):
            ang = 2.0 * math.pi * (p + 0.5 * s) / n_phases
            levels[s, p, 0] = math.cos(ang) * (1.0 + 0.2 * s)
            levels[s, p, 1] = math.sin(ang) * (1.0 + 0.1 * s)
            levels[s, p, 2] = ((p + s) % n_phases) / n_phases - 0.5
    return levels


def synthesize_walker(
    seed: int,
    cycles: int,
    period_mean: float,
    period_jitter: float = 0.0,
    sensors: int = 2,
    noise: float = 0.03,
    offset: float = 0.0,
    phases: int = 6,
) -> SyntheticWalk:
    """Generate a piecewise-plateau periodic walk with known cycle structure.

    Each cycle opens with a short high-amplitude marker burst on every
    channel, followed by ``phases`` constant plateaus whose levels differ
    per sensor; a trailing marker stub closes the final cycle.  Cycle
    lengths are ``round(period_mean + U(-period_jitter, period_jitter))``
    and the plateau boundaries inside each cycle wobble by the same
    amplitude, so the marker is the only state whose runs stay exact.
    ``offset`` shifts every level, so two walks with different offsets
    occupy disjoint signal ranges.
    """
    if cycles < 1:
        raise ValueError("cycles must be >= 1")
    if not period_mean > 0:
        raise ValueError("period_mean must be positive")
    if period_jitter < 0 or period_jitter >= period_mean / 4:
        raise ValueError("period_jitter must be in [0, period_mean / 4)")
    if sensors < 1:
        raise ValueError("sensors must be >= 1")
    if phases < 2:
        raise ValueError("phases must be >= 2")

    base = int(round(period_mean))
    marker_len = max(3, base // 16)
    if base < marker_len + phases:
        raise ValueError(
            f"period_mean {period_mean} too short for {phases} phases "
            f"plus a {marker_len}-sample marker"
        )

    rng = np.random.default_rng(seed)
    jitters = np.rint(rng.uniform(-period_jitter, period_jitter, cycles))
    lengths = (base + jitters).astype(int)

    levels = _phase_levels(sensors, phases)
    columns: list[np.ndarray] = []
    for length in lengths:
        block = np.empty((3 * sensors, length))
        block[:, :marker_len] = MARKER_LEVEL
        wave = length - marker_len
        # plateau edges wobble with the same amplitude as the period, so
        # only the marker keeps zero run-size and recurrence variance
        edges = np.array(
            [round(p * wave / phases) for p in range(phases + 1)], dtype=int
        )
        if period_jitter > 0:
            wobble = np.rint(
                rng.uniform(-period_jitter, period_jitter, phases - 1)
            ).astype(int)
            for p in range(1, phases):
                low = edges[p - 1] + 1
                high = wave - (phases - p)
                edges[p] = min(max(edges[p] + wobble[p - 1], low), high)
        for p in range(phases):
            for s in range(sensors):
                block[
                    3 * s : 3 * s + 3,
                    marker_len + edges[p] : marker_len + edges[p + 1],
                ] = levels[s, p][:, None]
        columns.append(block)
    columns.append(np.full((3 * sensors, marker_len), MARKER_LEVEL))

    values = np.concatenate(columns, axis=1)
    values = values + offset + noise * rng.standard_normal(values.shape)

    ends = np.cumsum(lengths)
    boundaries = np.concatenate(([0], ends, [ends[-1] + marker_len]))
    channels = tuple(
        (f"S{s}", axis) for s in range(sensors) for axis in AXES
    )
    frame = TimeSeriesFrame(
        values=values,
        channels=channels,
        sample_rate_hz=128.0,
        subject_id=f"walker-{seed}",
        activity="synthetic",
    )
    return SyntheticWalk(
        frame=frame,
        boundaries=boundaries,
        cycle_lengths=lengths,
        marker_len=marker_len,
    )
