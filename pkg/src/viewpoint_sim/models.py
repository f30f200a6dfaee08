"""Parameter containers shared by every predictor family.

A model is an immutable value: ``update`` returns a new model and never touches the
arrays of the one it was called on. Inputs and targets are normalized angles
(see core.normalize_angle); a window is ``(t_w,)`` or ``(t_w, input_width)``.
"""

import dataclasses
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, ClassVar, Optional

import numpy as np

from .errors import ConfigError, DataError, DimensionMismatchError, NonFiniteGradientError
from .errors import NullInWindowError

logger = logging.getLogger(__name__)

DEFAULT_LEARNING_RATE = 0.001
DEFAULT_ONLINE_LEARNING_RATE = 0.05  # neural models, per-slot updates at the SBS
OUTPUT_BIAS_INIT = 0.5  # centre of the normalized angle range


class ModelKind(Enum):
    """Predictor families."""

    LR = "lr"
    NN = "nn"
    LSTM = "lstm"
    GRU = "gru"

    @classmethod
    def parse(cls, value: "ModelKind | str") -> "ModelKind":
        if isinstance(value, ModelKind):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            choices = ", ".join(k.value for k in cls)
            raise ConfigError(f"Unknown predictor '{value}' (expected one of {choices})") from None

    @property
    def is_recurrent(self) -> bool:
        return self in (ModelKind.LSTM, ModelKind.GRU)


def glorot_uniform(rng: np.random.Generator, shape: tuple[int, int]) -> np.ndarray:
    """Uniform in +-sqrt(6 / (fan_in + fan_out))."""
    fan_out, fan_in = shape
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


@dataclass(frozen=True, eq=False)
class PredictorModel:
    """Base for all predictors: named parameter arrays plus a learning rate.

    Subclasses provide ``expected_shapes``, ``forward`` and ``backward``. The loss is
    always (pred - target)^2 on normalized values.
    """

    params: dict[str, np.ndarray]
    learning_rate: float = DEFAULT_LEARNING_RATE
    t_w: int = 10
    input_width: int = 1

    _kind: ClassVar[ModelKind]
    grad_clip: ClassVar[Optional[float]] = None

    def __post_init__(self):
        # 0 is allowed: a frozen model still runs through the update path.
        if not 0.0 <= self.learning_rate <= 1.0:
            raise ConfigError(f"learning_rate must be in [0, 1], got {self.learning_rate}")
        expected = self.expected_shapes()
        if set(self.params) != set(expected):
            raise DimensionMismatchError(
                f"{self.kind.value} parameters {sorted(self.params)} != {sorted(expected)}"
            )
        frozen = {}
        for name, shape in expected.items():
            arr = np.array(self.params[name], dtype=float)
            if arr.shape != shape:
                raise DimensionMismatchError(f"{name}: shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise DataError(f"{name}: non-finite parameter values")
            arr.setflags(write=False)
            frozen[name] = arr
        object.__setattr__(self, "params", frozen)

    # -- subclass hooks -------------------------------------------------------

    def expected_shapes(self) -> dict[str, tuple[int, ...]]:
        raise NotImplementedError

    def forward(self, window) -> tuple[float, Any]:
        """Prediction for one window plus whatever backward needs."""
        raise NotImplementedError

    def backward(self, cache: Any, dpred: float) -> dict[str, np.ndarray]:
        """Parameter gradients given dL/dpred."""
        raise NotImplementedError

    def hyperparams(self) -> dict[str, Any]:
        """Constructor arguments other than params, for snapshots."""
        return {
            "learning_rate": self.learning_rate,
            "t_w": self.t_w,
            "input_width": self.input_width,
        }

    # -- shared behaviour -----------------------------------------------------

    @property
    def kind(self) -> ModelKind:
        return self._kind

    def as_input(self, window) -> np.ndarray:
        """Validate a window and return it as (t_w, input_width)."""
        x = np.asarray(window, dtype=float)
        if x.ndim == 1 and self.input_width == 1:
            x = x.reshape(-1, 1)
        if x.shape != (self.t_w, self.input_width):
            raise DimensionMismatchError(
                f"window shape {np.shape(window)}, expected ({self.t_w}, {self.input_width})"
            )
        if np.isnan(x).any():
            raise NullInWindowError("window contains NULL entries; impute before predicting")
        return x

    def predict(self, window) -> float:
        return self.forward(window)[0]

    def loss(self, window, target: float) -> float:
        return (self.predict(window) - float(target)) ** 2

    def gradients(self, window, target: float) -> tuple[float, dict[str, np.ndarray]]:
        """Prediction and gradients of (pred - target)^2."""
        pred, cache = self.forward(window)
        return pred, self.backward(cache, 2.0 * (pred - float(target)))

    def apply_gradients(self, grads: dict[str, np.ndarray]) -> "PredictorModel":
        """One SGD step; raises NonFiniteGradientError without building a new model."""
        for name, g in grads.items():
            if not np.all(np.isfinite(g)):
                raise NonFiniteGradientError(f"{self.kind.value}: non-finite gradient in {name}")
        if self.grad_clip is not None:
            norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))
            if norm > self.grad_clip:
                scale = self.grad_clip / norm
                grads = {name: g * scale for name, g in grads.items()}
        lr = self.learning_rate
        return self.with_params({name: p - lr * grads[name] for name, p in self.params.items()})

    def update(self, window, target: float) -> "PredictorModel":
        """Single-example SGD step toward target."""
        _, grads = self.gradients(window, target)
        return self.apply_gradients(grads)

    def with_params(self, params: dict[str, np.ndarray]) -> "PredictorModel":
        return dataclasses.replace(self, params=params)

    def with_learning_rate(self, learning_rate: float) -> "PredictorModel":
        return dataclasses.replace(self, learning_rate=learning_rate)

    def flat_params(self) -> np.ndarray:
        """All parameters concatenated in expected_shapes order."""
        return np.concatenate([self.params[name].ravel() for name in self.expected_shapes()])

    def from_flat(self, flat) -> "PredictorModel":
        flat = np.asarray(flat, dtype=float)
        params = {}
        offset = 0
        for name, shape in self.expected_shapes().items():
            size = int(np.prod(shape))
            if offset + size > flat.size:
                raise DimensionMismatchError("flat parameter vector too short")
            params[name] = flat[offset : offset + size].reshape(shape)
            offset += size
        if offset != flat.size:
            raise DimensionMismatchError("flat parameter vector too long")
        return self.with_params(params)

    def same_params(self, other: "PredictorModel") -> bool:
        """Bit-for-bit parameter equality."""
        return set(self.params) == set(other.params) and all(
            np.array_equal(self.params[k], other.params[k]) for k in self.params
        )
