"""Single-layer LSTM / GRU with a rectifier output unit, trained by BPTT.

The cell is unrolled over the t_w window slots starting from a zero state; only the
final hidden state feeds the output layer. Gate blocks are stacked row-wise in Wx, Wh
and b: LSTM uses [input, forget, output, candidate], GRU uses [reset, update, new].
"""

from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.special import expit

from .errors import ConfigError
from .models import (
    DEFAULT_LEARNING_RATE,
    OUTPUT_BIAS_INIT,
    ModelKind,
    PredictorModel,
    glorot_uniform,
)
from .rng import SeedLike, as_generator

DEFAULT_HIDDEN_UNITS = 12
GRAD_CLIP_NORM = 5.0
FORGET_BIAS_INIT = 1.0  # LSTM forget gate starts mostly open

_GATES = {ModelKind.LSTM: 4, ModelKind.GRU: 3}


@dataclass(frozen=True, eq=False)
class RnnModel(PredictorModel):
    """Recurrent predictor; ``cell`` selects LSTM or GRU."""

    cell: ModelKind = ModelKind.LSTM
    hidden: int = DEFAULT_HIDDEN_UNITS

    grad_clip = GRAD_CLIP_NORM

    def __post_init__(self):
        cell = ModelKind.parse(self.cell)
        if not cell.is_recurrent:
            raise ConfigError(f"recurrent cell must be lstm or gru, got {cell.value}")
        object.__setattr__(self, "cell", cell)
        if self.hidden < 1:
            raise ConfigError(f"hidden units must be >= 1, got {self.hidden}")
        super().__post_init__()

    @property
    def kind(self) -> ModelKind:
        return self.cell

    @property
    def n_gates(self) -> int:
        return _GATES[self.cell]

    def expected_shapes(self) -> dict[str, tuple[int, ...]]:
        rows = self.n_gates * self.hidden
        return {
            "Wx": (rows, self.input_width),
            "Wh": (rows, self.hidden),
            "b": (rows,),
            "Wy": (1, self.hidden),
            "by": (1,),
        }

    def hyperparams(self) -> dict[str, Any]:
        return {**super().hyperparams(), "cell": self.cell.value, "hidden": self.hidden}

    def forward(self, window) -> tuple[float, Any]:
        return rnn_forward(self, window)

    def backward(self, cache: Any, dpred: float) -> dict[str, np.ndarray]:
        steps, h_last, z_out = cache
        p = self.params
        H = self.hidden
        grads = {name: np.zeros_like(arr) for name, arr in p.items()}

        dz = dpred * float(z_out > 0)
        grads["Wy"] = dz * h_last.reshape(1, -1)
        grads["by"] = np.array([dz])
        dh = dz * p["Wy"][0]

        if self.cell is ModelKind.LSTM:
            dc = np.zeros(H)
            for x, h_prev, c_prev, i, f, o, g, c in reversed(steps):
                tc = np.tanh(c)
                dc = dc + dh * o * (1.0 - tc * tc)
                da = np.concatenate(
                    [
                        dc * g * i * (1.0 - i),
                        dc * c_prev * f * (1.0 - f),
                        dh * tc * o * (1.0 - o),
                        dc * i * (1.0 - g * g),
                    ]
                )
                grads["Wx"] += np.outer(da, x)
                grads["Wh"] += np.outer(da, h_prev)
                grads["b"] += da
                dh = p["Wh"].T @ da
                dc = dc * f
        else:
            Wh_r, Wh_z, Wh_n = p["Wh"][:H], p["Wh"][H : 2 * H], p["Wh"][2 * H :]
            for x, h_prev, r, z, n in reversed(steps):
                da_n = dh * (1.0 - z) * (1.0 - n * n)
                da_z = dh * (h_prev - n) * z * (1.0 - z)
                drh = Wh_n.T @ da_n
                da_r = drh * h_prev * r * (1.0 - r)
                da = np.concatenate([da_r, da_z, da_n])
                grads["Wx"] += np.outer(da, x)
                grads["Wh"][:H] += np.outer(da_r, h_prev)
                grads["Wh"][H : 2 * H] += np.outer(da_z, h_prev)
                grads["Wh"][2 * H :] += np.outer(da_n, r * h_prev)
                grads["b"] += da
                dh = dh * z + drh * r + Wh_r.T @ da_r + Wh_z.T @ da_z
        return grads


def _lstm_step(p, H, x, h, c):
    a = p["Wx"] @ x + p["Wh"] @ h + p["b"]
    i = expit(a[:H])
    f = expit(a[H : 2 * H])
    o = expit(a[2 * H : 3 * H])
    g = np.tanh(a[3 * H :])
    c_new = f * c + i * g
    h_new = o * np.tanh(c_new)
    return h_new, c_new, (x, h, c, i, f, o, g, c_new)


def _gru_step(p, H, x, h):
    ax = p["Wx"] @ x + p["b"]
    Wh = p["Wh"]
    r = expit(ax[:H] + Wh[:H] @ h)
    z = expit(ax[H : 2 * H] + Wh[H : 2 * H] @ h)
    n = np.tanh(ax[2 * H :] + Wh[2 * H :] @ (r * h))
    h_new = (1.0 - z) * n + z * h
    return h_new, (x, h, r, z, n)


def rnn_forward(model: RnnModel, window) -> tuple[float, Any]:
    """Unroll the cell over the window; cache holds every step's gate values."""
    xs = model.as_input(window)
    p = model.params
    H = model.hidden
    h = np.zeros(H)
    c = np.zeros(H)
    steps = []
    for x in xs:
        if model.cell is ModelKind.LSTM:
            h, c, step = _lstm_step(p, H, x, h, c)
        else:
            h, step = _gru_step(p, H, x, h)
        steps.append(step)
    z_out = float(p["Wy"][0] @ h + p["by"][0])
    return max(z_out, 0.0), (steps, h, z_out)


def rnn_update(model: RnnModel, window, target: float) -> RnnModel:
    """BPTT step on (pred - target)^2 with global-norm clipping."""
    return model.update(window, target)


def init_rnn(
    t_w: int,
    seed: SeedLike = 0,
    cell: ModelKind | str = ModelKind.LSTM,
    hidden: int = DEFAULT_HIDDEN_UNITS,
    learning_rate: float = DEFAULT_LEARNING_RATE,
    input_width: int = 1,
) -> RnnModel:
    cell = ModelKind.parse(cell)
    if not cell.is_recurrent:
        raise ConfigError(f"recurrent cell must be lstm or gru, got {cell.value}")
    rng = as_generator(seed)
    rows = _GATES[cell] * hidden
    b = np.zeros(rows)
    if cell is ModelKind.LSTM:
        b[hidden : 2 * hidden] = FORGET_BIAS_INIT
    params = {
        "Wx": glorot_uniform(rng, (rows, input_width)),
        "Wh": glorot_uniform(rng, (rows, hidden)),
        "b": b,
        "Wy": glorot_uniform(rng, (1, hidden)),
        "by": np.full(1, OUTPUT_BIAS_INIT),
    }
    return RnnModel(
        params=params,
        learning_rate=learning_rate,
        t_w=t_w,
        input_width=input_width,
        cell=cell,
        hidden=hidden,
    )
