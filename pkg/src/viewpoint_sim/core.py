"""Domain types for viewpoint traces, sliding windows, and error metrics.

Angles are degrees in (-180, 180] throughout. A trace is one user's pitch/yaw/roll
(X, Y, Z) per 0.1 s slot while watching one video. Predictors see angles normalized to
[0, 1]; everything reported back to the user is in degrees.
"""

import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import (
    AngleRangeError,
    ColdWindowError,
    ConfigError,
    DataError,
    LengthMismatchError,
    TraceTooShortError,
)

SLOT_SECONDS = 0.1
DEFAULT_T_TOT = 300
MAX_VIDEO_ID = 16

# Prior held by a window before any sample has been delivered: the view centre.
DEFAULT_HELD_ANGLE = 0.0


class Axis(Enum):
    """Rotation axes of a viewpoint."""

    X = "x"  # pitch
    Y = "y"  # yaw
    Z = "z"  # roll

    @classmethod
    def parse(cls, value: "Axis | str") -> "Axis":
        if isinstance(value, Axis):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ConfigError(f"Unknown axis '{value}' (expected x, y or z)") from None


class Imputation(Enum):
    """How undelivered (NULL) window entries are filled before prediction."""

    HOLD = "hold"  # last observed value
    INTERPOLATE = "interpolate"  # linear between observed neighbours, hold at the edges


def _check_angle(value: float, name: str = "angle") -> float:
    value = float(value)
    if not math.isfinite(value) or not (-180.0 < value <= 180.0):
        raise AngleRangeError(f"{name}={value} outside (-180, 180]")
    return value


# ============================================================================
# Traces
# ============================================================================


@dataclass(frozen=True)
class ViewpointSample:
    """One slot of a user's head orientation."""

    t: int
    x: float
    y: float
    z: float

    def __post_init__(self):
        if int(self.t) != self.t or self.t < 0:
            raise DataError(f"slot index must be a non-negative integer, got {self.t}")
        object.__setattr__(self, "t", int(self.t))
        for axis in Axis:
            object.__setattr__(
                self, axis.value, _check_angle(getattr(self, axis.value), axis.value)
            )

    def angle(self, axis: Axis) -> float:
        return getattr(self, Axis.parse(axis).value)


@dataclass(frozen=True)
class Trace:
    """All samples of one user for one video, contiguous from slot 0."""

    video_id: int
    user_id: int
    samples: tuple[ViewpointSample, ...]

    def __post_init__(self):
        if not 1 <= self.video_id <= MAX_VIDEO_ID:
            raise DataError(f"video_id must be in 1..{MAX_VIDEO_ID}, got {self.video_id}")
        if self.user_id < 0:
            raise DataError(f"user_id must be non-negative, got {self.user_id}")
        samples = tuple(self.samples)
        for i, sample in enumerate(samples):
            if sample.t != i:
                raise DataError(
                    f"video {self.video_id} user {self.user_id}: expected slot {i}, "
                    f"found {sample.t}"
                )
        object.__setattr__(self, "samples", samples)

    @classmethod
    def from_arrays(
        cls,
        video_id: int,
        user_id: int,
        x: Sequence[float],
        y: Sequence[float],
        z: Sequence[float],
    ) -> "Trace":
        if not len(x) == len(y) == len(z):
            raise LengthMismatchError("x, y and z series differ in length")
        samples = tuple(
            ViewpointSample(t, float(a), float(b), float(c))
            for t, (a, b, c) in enumerate(zip(x, y, z))
        )
        return cls(video_id=video_id, user_id=user_id, samples=samples)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def key(self) -> tuple[int, int]:
        return (self.video_id, self.user_id)

    @cached_property
    def _series(self) -> dict[Axis, np.ndarray]:
        out = {}
        for axis in Axis:
            arr = np.array([getattr(s, axis.value) for s in self.samples], dtype=float)
            arr.setflags(write=False)
            out[axis] = arr
        return out

    def series(self, axis: Axis | str) -> np.ndarray:
        """Read-only angle series for one axis."""
        return self._series[Axis.parse(axis)]


@dataclass(frozen=True)
class TraceSet:
    """A dataset: traces ordered by (video_id, user_id), unique keys."""

    traces: tuple[Trace, ...]

    def __post_init__(self):
        ordered = tuple(sorted(self.traces, key=lambda tr: tr.key))
        keys = [tr.key for tr in ordered]
        if len(set(keys)) != len(keys):
            raise DataError("duplicate (video_id, user_id) traces in dataset")
        object.__setattr__(self, "traces", ordered)

    def __len__(self) -> int:
        return len(self.traces)

    def __iter__(self):
        return iter(self.traces)

    def video_ids(self) -> list[int]:
        return sorted({tr.video_id for tr in self.traces})

    def by_video(self) -> dict[int, list[Trace]]:
        groups: dict[int, list[Trace]] = {}
        for tr in self.traces:
            groups.setdefault(tr.video_id, []).append(tr)
        return groups


# ============================================================================
# Windows
# ============================================================================


@dataclass(frozen=True)
class WindowConfig:
    """Sliding-window shape: t_w past slots predict the slot d ahead."""

    t_w: int = 10
    d: int = 1
    dims: tuple[Axis, ...] = (Axis.Y,)
    joint: bool = False  # feed all dims to each per-axis model

    def __post_init__(self):
        if self.t_w < 1:
            raise ConfigError(f"window length t_w must be >= 1, got {self.t_w}")
        if self.d < 1:
            raise ConfigError(f"prediction offset d must be >= 1, got {self.d}")
        dims = tuple(Axis.parse(a) for a in self.dims)
        if not dims or len(set(dims)) != len(dims):
            raise ConfigError(f"dims must be a non-empty set of axes, got {self.dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def input_width(self) -> int:
        """Values per slot seen by a model."""
        return len(self.dims) if self.joint else 1


@dataclass(frozen=True, eq=False)
class WindowedExample:
    """t_w feature slots (degrees) and the angle d slots after the last one."""

    t: int  # slot of the target
    axis: Axis
    features: np.ndarray  # (t_w,) or (t_w, n_dims) when joint
    target: float
    available: np.ndarray  # per feature slot: delivered?


def make_windowed_examples(
    trace: Trace, cfg: WindowConfig, dim: Axis | str
) -> list[WindowedExample]:
    """Cut a trace into every (window, target) pair it contains.

    Features for the example targeting slot t+d are slots t-t_w+1..t; there are
    len(trace) - t_w - d + 1 examples.
    """
    dim = Axis.parse(dim)
    n = len(trace)
    if n < cfg.t_w + cfg.d:
        raise TraceTooShortError(
            f"trace {trace.key} has {n} slots, needs at least t_w + d = {cfg.t_w + cfg.d}"
        )
    if cfg.joint:
        data = np.stack([trace.series(a) for a in cfg.dims], axis=1)
    else:
        data = trace.series(dim)
    targets = trace.series(dim)
    available = np.ones(cfg.t_w, dtype=bool)
    available.setflags(write=False)

    examples = []
    for end in range(cfg.t_w - 1, n - cfg.d):
        features = data[end - cfg.t_w + 1 : end + 1].copy()
        features.setflags(write=False)
        examples.append(
            WindowedExample(
                t=end + cfg.d,
                axis=dim,
                features=features,
                target=float(targets[end + cfg.d]),
                available=available,
            )
        )
    return examples


class SlidingWindow:
    """Per-axis buffer of the last t_w slots as received at the base station.

    Entries are the delivered angle or NULL when the uplink failed. With a prediction
    offset d > 1 the newest d - 1 pushes wait in a lag line before entering the window,
    so the window always ends d slots before the slot being predicted.

    Single owner, mutable.
    """

    def __init__(self, t_w: int, dims: Iterable[Axis | str] = (Axis.Y,), lag: int = 0):
        if t_w < 1:
            raise ValueError(f"t_w must be >= 1, got {t_w}")
        if lag < 0:
            raise ValueError(f"lag must be >= 0, got {lag}")
        self.t_w = t_w
        self.lag = lag
        self.dims = tuple(Axis.parse(a) for a in dims)
        # Each entry: (observed values or None, values held at that slot)
        self._window: deque = deque(maxlen=t_w)
        self._pending: deque = deque()
        self._held = {axis: DEFAULT_HELD_ANGLE for axis in self.dims}

    @classmethod
    def for_config(cls, cfg: WindowConfig) -> "SlidingWindow":
        return cls(cfg.t_w, cfg.dims, lag=cfg.d - 1)

    def __len__(self) -> int:
        return len(self._window)

    @property
    def is_warm(self) -> bool:
        return len(self._window) == self.t_w

    def push(self, values: Optional[Mapping[Axis, float]]) -> None:
        """Advance one slot with the delivered angles, or None for NULL."""
        if values is not None:
            observed = {axis: float(values[axis]) for axis in self.dims}
            self._held = dict(observed)
        else:
            observed = None
        self._pending.append((observed, dict(self._held)))
        if len(self._pending) > self.lag:
            self._window.append(self._pending.popleft())

    def latest(self, axis: Axis | str) -> Optional[float]:
        """Most recently pushed entry (None for NULL)."""
        axis = Axis.parse(axis)
        source = self._pending if self._pending else self._window
        if not source:
            return None
        observed, _ = source[-1]
        return None if observed is None else observed[axis]

    def entries(self, axis: Axis | str) -> list[Optional[float]]:
        axis = Axis.parse(axis)
        return [None if obs is None else obs[axis] for obs, _ in self._window]

    def available(self) -> np.ndarray:
        return np.array([obs is not None for obs, _ in self._window], dtype=bool)

    def imputed(self, axis: Axis | str, policy: Imputation = Imputation.HOLD) -> np.ndarray:
        """Window values for one axis with NULLs filled in, oldest first."""
        axis = Axis.parse(axis)
        if not self.is_warm:
            raise ColdWindowError(f"window holds {len(self._window)} of {self.t_w} slots")
        held = np.array([h[axis] for _, h in self._window], dtype=float)
        if Imputation(policy) is Imputation.HOLD:
            return held
        mask = self.available()
        if not mask.any():
            return held
        idx = np.arange(self.t_w)
        observed = np.array([obs[axis] for obs, _ in self._window if obs is not None])
        out = np.interp(idx, idx[mask], observed)
        first = int(np.argmax(mask))
        out[:first] = held[:first]
        return out

    def imputed_matrix(self, policy: Imputation = Imputation.HOLD) -> np.ndarray:
        """(t_w, n_dims) imputed values for all axes."""
        return np.stack([self.imputed(axis, policy) for axis in self.dims], axis=1)

    def copy(self) -> "SlidingWindow":
        other = SlidingWindow(self.t_w, self.dims, self.lag)
        other._window = deque(self._window, maxlen=self.t_w)
        other._pending = deque(self._pending)
        other._held = dict(self._held)
        return other


# ============================================================================
# Angle arithmetic and metrics
# ============================================================================


def wrapped_angle_error(a: float, b: float) -> float:
    """Distance between two angles on the circle, in [0, 180]."""
    diff = abs(float(a) - float(b)) % 360.0
    return min(diff, 360.0 - diff)


def wrapped_angle_diff(a, b) -> np.ndarray:
    """Element-wise wrapped_angle_error."""
    diff = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)) % 360.0
    return np.minimum(diff, 360.0 - diff)


def wrap_angle(a):
    """Map any angle into (-180, 180]."""
    arr = np.asarray(a, dtype=float)
    out = np.mod(arr + 180.0, 360.0) - 180.0
    out = np.where(out == -180.0, 180.0, out)
    return float(out) if out.ndim == 0 else out


def normalize_angle(a):
    """(a + 180) / 360, mapping (-180, 180] onto (0, 1]."""
    arr = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any((arr <= -180.0) | (arr > 180.0)):
        raise AngleRangeError(f"angle outside (-180, 180]: {a}")
    out = (arr + 180.0) / 360.0
    return float(out) if out.ndim == 0 else out


def denormalize_angle(u):
    """Inverse of normalize_angle; model outputs outside [0, 1] pass through."""
    out = np.asarray(u, dtype=float) * 360.0 - 180.0
    return float(out) if out.ndim == 0 else out


def mse(preds: Sequence[float], actuals: Sequence[float]) -> float:
    """Mean squared wrapped error in degrees squared."""
    p = np.asarray(preds, dtype=float)
    a = np.asarray(actuals, dtype=float)
    if p.shape != a.shape or p.size == 0:
        raise LengthMismatchError(
            f"preds and actuals must be equal, non-empty lengths ({p.size} vs {a.size})"
        )
    return float(np.mean(wrapped_angle_diff(p, a) ** 2))


@dataclass(frozen=True, eq=False)
class ErrorRecord:
    """Per-slot prediction errors of one user on one axis."""

    video_id: int
    user_id: int
    axis: Axis
    slots: np.ndarray
    squared_errors: np.ndarray  # degrees^2
    abs_errors: np.ndarray = field(repr=False)  # wrapped, degrees

    @classmethod
    def from_predictions(
        cls,
        preds: Sequence[float],
        actuals: Sequence[float],
        slots: Sequence[int],
        video_id: int = 1,
        user_id: int = 0,
        axis: Axis = Axis.Y,
    ) -> "ErrorRecord":
        p = np.asarray(preds, dtype=float)
        a = np.asarray(actuals, dtype=float)
        s = np.asarray(slots, dtype=int)
        if not (p.shape == a.shape == s.shape):
            raise LengthMismatchError("preds, actuals and slots differ in length")
        abs_err = wrapped_angle_diff(p, a)
        return cls(video_id, user_id, Axis.parse(axis), s, abs_err**2, abs_err)

    def __len__(self) -> int:
        return len(self.slots)

    @property
    def mse(self) -> float:
        if len(self) == 0:
            raise LengthMismatchError("empty error record")
        return float(np.mean(self.squared_errors))

    @property
    def normalized_error(self) -> float:
        """Mean wrapped absolute error as a fraction of the full circle."""
        if len(self) == 0:
            raise LengthMismatchError("empty error record")
        return float(np.mean(self.abs_errors) / 360.0)


def average_prediction_error(
    records: Sequence[ErrorRecord], require_equal_length: bool = True
) -> float:
    """Mean squared error over every user and scored slot (degrees squared)."""
    if not records:
        raise DataError("no error records to average")
    if require_equal_length and len({len(r) for r in records}) != 1:
        raise LengthMismatchError("error records differ in length")
    total = np.concatenate([r.squared_errors for r in records])
    if total.size == 0:
        raise DataError("error records contain no slots")
    return float(total.sum() / total.size)


def normalized_error(records: Sequence[ErrorRecord]) -> float:
    """Pooled mean wrapped absolute error / 360 over all records."""
    if not records:
        raise DataError("no error records to average")
    total = np.concatenate([r.abs_errors for r in records])
    if total.size == 0:
        raise DataError("error records contain no slots")
    return float(total.mean() / 360.0)
