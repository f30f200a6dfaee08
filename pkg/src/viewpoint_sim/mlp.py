"""Fully connected network: rectifier hidden layers and a rectifier output unit."""

from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import ConfigError
from .models import (
    DEFAULT_LEARNING_RATE,
    OUTPUT_BIAS_INIT,
    ModelKind,
    PredictorModel,
    glorot_uniform,
    relu,
)
from .rng import SeedLike, as_generator

DEFAULT_HIDDEN = (12, 10)


@dataclass(frozen=True, eq=False)
class MlpModel(PredictorModel):
    """Layers l = 1..L with parameters W{l} (out, in) and b{l} (out,); last layer has 1 unit."""

    hidden: tuple[int, ...] = DEFAULT_HIDDEN

    _kind = ModelKind.NN

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if any(h < 1 for h in self.hidden):
            raise ConfigError(f"hidden layer sizes must be >= 1, got {self.hidden}")
        super().__post_init__()

    @property
    def layer_sizes(self) -> list[int]:
        return [self.t_w * self.input_width, *self.hidden, 1]

    @property
    def n_layers(self) -> int:
        return len(self.hidden) + 1

    def expected_shapes(self) -> dict[str, tuple[int, ...]]:
        sizes = self.layer_sizes
        shapes = {}
        for l in range(1, len(sizes)):
            shapes[f"W{l}"] = (sizes[l], sizes[l - 1])
            shapes[f"b{l}"] = (sizes[l],)
        return shapes

    def hyperparams(self) -> dict[str, Any]:
        return {**super().hyperparams(), "hidden": list(self.hidden)}

    def forward(self, window) -> tuple[float, Any]:
        return mlp_forward(self, window)

    def backward(self, cache: Any, dpred: float) -> dict[str, np.ndarray]:
        activations, pre_activations = cache
        grads = {}
        dz = dpred * (pre_activations[-1] > 0).astype(float)
        for l in range(self.n_layers, 0, -1):
            grads[f"W{l}"] = np.outer(dz, activations[l - 1])
            grads[f"b{l}"] = dz
            if l > 1:
                da = self.params[f"W{l}"].T @ dz
                dz = da * (pre_activations[l - 2] > 0)
        return grads


def mlp_forward(model: MlpModel, window) -> tuple[float, Any]:
    """Prediction and cache (post-activations a_0..a_L, pre-activations z_1..z_L)."""
    a = model.as_input(window).reshape(-1)
    activations = [a]
    pre_activations = []
    for l in range(1, model.n_layers + 1):
        z = model.params[f"W{l}"] @ a + model.params[f"b{l}"]
        a = relu(z)
        pre_activations.append(z)
        activations.append(a)
    return float(a[0]), (activations, pre_activations)


def mlp_update(model: MlpModel, window, target: float) -> MlpModel:
    """Backpropagation step on (pred - target)^2."""
    return model.update(window, target)


def init_mlp(
    t_w: int,
    seed: SeedLike = 0,
    hidden: tuple[int, ...] = DEFAULT_HIDDEN,
    learning_rate: float = DEFAULT_LEARNING_RATE,
    input_width: int = 1,
) -> MlpModel:
    rng = as_generator(seed)
    sizes = [t_w * input_width, *hidden, 1]
    params = {}
    for l in range(1, len(sizes)):
        params[f"W{l}"] = glorot_uniform(rng, (sizes[l], sizes[l - 1]))
        params[f"b{l}"] = np.zeros(sizes[l])
    params[f"b{len(sizes) - 1}"] = np.full(1, OUTPUT_BIAS_INIT)
    return MlpModel(
        params=params,
        learning_rate=learning_rate,
        t_w=t_w,
        input_width=input_width,
        hidden=tuple(hidden),
    )
