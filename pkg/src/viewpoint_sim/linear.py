"""n-order linear regression on element-wise powers of the window.

pred = W . [g, g^2, ..., g^n] + b, trained by per-example gradient descent.
"""

from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import ConfigError, DimensionMismatchError, NullInWindowError
from .models import DEFAULT_LEARNING_RATE, ModelKind, PredictorModel
from .rng import SeedLike

DEFAULT_ORDER = 15


def lr_features(window, n: int) -> np.ndarray:
    """Concatenate element-wise powers 1..n of the (flattened) window."""
    if n < 1:
        raise ConfigError(f"order must be >= 1, got {n}")
    w = np.asarray(window, dtype=float).reshape(-1)
    if np.isnan(w).any():
        raise NullInWindowError("window contains NULL entries; impute before building features")
    return np.concatenate([w**k for k in range(1, n + 1)])


@dataclass(frozen=True, eq=False)
class LrModel(PredictorModel):
    """Weights W of length order * t_w * input_width and a scalar bias b."""

    order: int = DEFAULT_ORDER

    _kind = ModelKind.LR

    def expected_shapes(self) -> dict[str, tuple[int, ...]]:
        return {"W": (self.order * self.t_w * self.input_width,), "b": (1,)}

    def hyperparams(self) -> dict[str, Any]:
        return {**super().hyperparams(), "order": self.order}

    def forward(self, window) -> tuple[float, Any]:
        g = lr_features(self.as_input(window), self.order)
        return lr_predict(self, g), g

    def backward(self, cache: Any, dpred: float) -> dict[str, np.ndarray]:
        g = cache
        return {"W": dpred * g, "b": np.array([dpred])}


def lr_predict(model: LrModel, g) -> float:
    """dot(W, g) + b on an already-expanded feature vector."""
    g = np.asarray(g, dtype=float)
    if g.shape != model.params["W"].shape:
        raise DimensionMismatchError(
            f"feature length {g.size}, expected {model.params['W'].size}"
        )
    return float(model.params["W"] @ g + model.params["b"][0])


def lr_update(model: LrModel, g, target: float) -> LrModel:
    """One gradient step on (pred - target)^2 given expanded features g."""
    g = np.asarray(g, dtype=float)
    pred = lr_predict(model, g)
    return model.apply_gradients(model.backward(g, 2.0 * (pred - float(target))))


def init_lr(
    t_w: int,
    seed: SeedLike = 0,
    order: int = DEFAULT_ORDER,
    learning_rate: float = DEFAULT_LEARNING_RATE,
    input_width: int = 1,
) -> LrModel:
    """All-zero LR model (seed accepted for a uniform factory signature)."""
    if order < 1:
        raise ConfigError(f"order must be >= 1, got {order}")
    size = order * t_w * input_width
    return LrModel(
        params={"W": np.zeros(size), "b": np.zeros(1)},
        learning_rate=learning_rate,
        t_w=t_w,
        input_width=input_width,
        order=order,
    )
