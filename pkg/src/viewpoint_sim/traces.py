"""Trace files and the synthetic trace generator.

CSV layout, one row per slot::

    video_id,user_id,slot,x_deg,y_deg,z_deg

Files written by ``write_traces`` are canonical: rows sorted by (video, user, slot),
``\\n`` line endings and shortest round-trip float text.
"""

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from .core import DEFAULT_T_TOT, MAX_VIDEO_ID, Axis, Trace, TraceSet, ViewpointSample
from .errors import ConfigError, DataError, TraceParseError
from .rng import substream

logger = logging.getLogger(__name__)

HEADER = ["video_id", "user_id", "slot", "x_deg", "y_deg", "z_deg"]

# Viewing ranges per axis (degrees, open interval)
AXIS_LIMITS = {Axis.X: 50.0, Axis.Y: 150.0, Axis.Z: 50.0}
NOISE_PERSISTENCE = 0.95
NOISE_FRACTION = 0.08  # per-user noise std as a fraction of the axis limit
OFFSET_FRACTION = 0.05


# ============================================================================
# CSV
# ============================================================================


def parse_traces(path: str | Path) -> TraceSet:
    """Read a trace CSV; malformed rows raise TraceParseError with the line number."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Trace file not found: {path}")

    groups: dict[tuple[int, int], list[tuple[int, int, ViewpointSample]]] = {}
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None:
            raise TraceParseError(path, 1, "empty file, expected a header row")
        if [h.strip() for h in header] != HEADER:
            raise TraceParseError(path, 1, f"bad header {header}, expected {','.join(HEADER)}")
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != len(HEADER):
                raise TraceParseError(path, line, f"expected {len(HEADER)} fields, got {len(row)}")
            try:
                video_id, user_id, slot = (int(v) for v in row[:3])
                x, y, z = (float(v) for v in row[3:])
            except ValueError as e:
                raise TraceParseError(path, line, f"unparseable value ({e})") from None
            try:
                sample = ViewpointSample(slot, x, y, z)
            except DataError as e:
                raise TraceParseError(path, line, str(e)) from None
            groups.setdefault((video_id, user_id), []).append((slot, line, sample))

    if not groups:
        raise TraceParseError(path, 1, "no data rows")

    traces = []
    for (video_id, user_id), rows in groups.items():
        rows.sort(key=lambda r: (r[0], r[1]))
        for expected, (slot, line, _) in enumerate(rows):
            if slot != expected:
                what = "duplicate" if slot < expected else "gap before"
                raise TraceParseError(
                    path, line, f"{what} slot {slot} for video {video_id} user {user_id}"
                )
        try:
            trace = Trace(video_id, user_id, tuple(s for _, _, s in rows))
        except DataError as e:
            raise TraceParseError(path, rows[0][1], str(e)) from None
        traces.append(trace)

    dataset = TraceSet(tuple(traces))
    logger.info(f"Parsed {len(dataset)} traces from {path}")
    return dataset


def write_traces(dataset: TraceSet, path: str | Path) -> None:
    """Write the canonical CSV form of a dataset."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(HEADER)
        for trace in dataset:
            for s in trace.samples:
                writer.writerow(
                    [trace.video_id, trace.user_id, s.t, repr(s.x), repr(s.y), repr(s.z)]
                )


# ============================================================================
# Synthetic generator
# ============================================================================


@dataclass(frozen=True)
class SynthConfig:
    """Shape of a synthetic dataset."""

    n_videos: int = 4
    users_per_video: int = 8
    t_tot: int = DEFAULT_T_TOT
    regime_shift: bool = False

    def __post_init__(self):
        if not 1 <= self.n_videos <= MAX_VIDEO_ID:
            raise ConfigError(f"n_videos must be in 1..{MAX_VIDEO_ID}, got {self.n_videos}")
        if self.users_per_video < 1:
            raise ConfigError(f"users_per_video must be >= 1, got {self.users_per_video}")
        if self.t_tot < 1:
            raise ConfigError(f"t_tot must be >= 1, got {self.t_tot}")


def _attractor_path(rng: np.random.Generator, limit: float, slots: np.ndarray) -> np.ndarray:
    """Sum of 2-3 sinusoids with periods of 4-20 s."""
    n = int(rng.integers(2, 4))
    amplitudes = limit * rng.uniform(0.4, 0.7) * rng.dirichlet(np.ones(n))
    periods = rng.uniform(40.0, 200.0, size=n)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=n)
    waves = amplitudes[:, None] * np.sin(
        2.0 * np.pi * slots[None, :] / periods[:, None] + phases[:, None]
    )
    return waves.sum(axis=0)


def _mean_reverting_noise(rng: np.random.Generator, std: float, n: int) -> np.ndarray:
    """Stationary AR(1) noise with the given marginal std."""
    xi = rng.standard_normal(n)
    first = std * xi[0]
    if n == 1:
        return np.array([first])
    gain = std * np.sqrt(1.0 - NOISE_PERSISTENCE**2)
    rest, _ = lfilter([gain], [1.0, -NOISE_PERSISTENCE], xi[1:], zi=[NOISE_PERSISTENCE * first])
    return np.concatenate([[first], rest])


def synth_traces(
    n_videos: int,
    users_per_video: int,
    t_tot: int = DEFAULT_T_TOT,
    seed: int = 0,
    regime_shift: bool = False,
) -> TraceSet:
    """Correlated synthetic traces: a shared per-video path plus per-user noise.

    With ``regime_shift`` each video's path switches to a fresh one, shared by all of
    its users, halfway through the trace. Angles are squashed with limit * tanh(v / limit),
    so they stay strictly inside each axis range.
    """
    cfg = SynthConfig(n_videos, users_per_video, t_tot, regime_shift)
    slots = np.arange(cfg.t_tot, dtype=float)
    shift_at = cfg.t_tot // 2
    traces = []
    for video_id in range(1, cfg.n_videos + 1):
        video_rng = substream(seed, "data", "video", video_id)
        paths = {axis: _attractor_path(video_rng, AXIS_LIMITS[axis], slots) for axis in Axis}
        if cfg.regime_shift:
            shift_rng = substream(seed, "data", "shift", video_id)
            for axis in Axis:
                shifted = _attractor_path(shift_rng, AXIS_LIMITS[axis], slots)
                paths[axis][shift_at:] = shifted[shift_at:]
        for user_id in range(cfg.users_per_video):
            user_rng = substream(seed, "data", "user", video_id, user_id)
            series = {}
            for axis in Axis:
                limit = AXIS_LIMITS[axis]
                offset = user_rng.normal(0.0, OFFSET_FRACTION * limit)
                noise = _mean_reverting_noise(user_rng, NOISE_FRACTION * limit, cfg.t_tot)
                series[axis] = limit * np.tanh((paths[axis] + offset + noise) / limit)
            traces.append(
                Trace.from_arrays(
                    video_id, user_id, series[Axis.X], series[Axis.Y], series[Axis.Z]
                )
            )
    logger.debug(f"Synthesized {len(traces)} traces (seed={seed})")
    return TraceSet(tuple(traces))


def load_dataset(data: str | None, synth: SynthConfig, seed: int) -> TraceSet:
    """Traces from a CSV path, or synthetic ones when no path is given."""
    if data is not None:
        return parse_traces(Path(data).expanduser())
    return synth_traces(
        synth.n_videos, synth.users_per_video, synth.t_tot, seed, synth.regime_shift
    )
