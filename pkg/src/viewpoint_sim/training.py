"""Model factory, offline training, evaluation and the finite-difference gradient check."""

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import WindowedExample, normalize_angle
from .errors import ConfigError, DataError, NonFiniteGradientError
from .linear import DEFAULT_ORDER, init_lr
from .mlp import init_mlp
from .models import DEFAULT_LEARNING_RATE, ModelKind, PredictorModel
from .recurrent import init_rnn
from .rng import SeedLike, as_generator, substream

logger = logging.getLogger(__name__)

DEFAULT_EPOCHS = 10
DEFAULT_TRAIN_LEARNING_RATE = 0.005


@dataclass(frozen=True)
class TrainConfig:
    """Offline schedule: per-example SGD over seeded shuffles."""

    epochs: int = DEFAULT_EPOCHS
    learning_rate: float = DEFAULT_TRAIN_LEARNING_RATE
    seed: int = 0
    order: int = DEFAULT_ORDER  # LR only

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ConfigError(f"learning_rate must be in (0, 1], got {self.learning_rate}")
        if self.order < 1:
            raise ConfigError(f"order must be >= 1, got {self.order}")


@dataclass(frozen=True, eq=False)
class TrainResult:
    model: PredictorModel
    epoch_losses: list[float] = field(default_factory=list)


def init_model(
    kind: ModelKind | str,
    t_w: int,
    seed: SeedLike = 0,
    learning_rate: float = DEFAULT_LEARNING_RATE,
    input_width: int = 1,
    order: int = DEFAULT_ORDER,
) -> PredictorModel:
    """Fresh model of the given kind with seeded initial weights."""
    kind = ModelKind.parse(kind)
    if kind is ModelKind.LR:
        return init_lr(t_w, seed, order=order, learning_rate=learning_rate, input_width=input_width)
    if kind is ModelKind.NN:
        return init_mlp(t_w, seed, learning_rate=learning_rate, input_width=input_width)
    return init_rnn(t_w, seed, cell=kind, learning_rate=learning_rate, input_width=input_width)


def example_arrays(example: WindowedExample) -> tuple[np.ndarray, float]:
    """Normalized (window, target) pair for a degree-valued example."""
    return normalize_angle(example.features), normalize_angle(example.target)


def train_offline(
    kind: ModelKind | str,
    examples: Sequence[WindowedExample],
    cfg: TrainConfig,
    stream: tuple = (),
    model: PredictorModel | None = None,
) -> TrainResult:
    """Train a model of ``kind`` on examples; ``stream`` names the RNG substreams.

    The per-epoch loss is the mean of (pred - target)^2 observed just before each
    update. A step whose gradient is non-finite is skipped and logged.

    Args:
        kind: Predictor family.
        examples: Degree-valued (window, target) pairs; normalized before each step.
        cfg: Epochs, learning rate, shuffling and seed.
        stream: Substream labels that keep each fold and axis independent.
        model: Starting model; a fresh one is initialized when omitted.

    Returns:
        The trained model with its per-epoch losses.
    """
    kind = ModelKind.parse(kind)
    if not examples:
        raise DataError("cannot train on an empty example list")
    pairs = [example_arrays(ex) for ex in examples]
    first = np.asarray(pairs[0][0])
    t_w = first.shape[0]
    input_width = 1 if first.ndim == 1 else first.shape[1]

    if model is None:
        model = init_model(
            kind,
            t_w,
            substream(cfg.seed, "init", *stream),
            learning_rate=cfg.learning_rate,
            input_width=input_width,
            order=cfg.order,
        )
    shuffle_rng = substream(cfg.seed, "shuffle", *stream)

    epoch_losses = []
    for epoch in range(cfg.epochs):
        order = shuffle_rng.permutation(len(pairs))
        total = 0.0
        for idx in order:
            window, target = pairs[idx]
            pred, grads = model.gradients(window, target)
            total += (pred - target) ** 2
            try:
                model = model.apply_gradients(grads)
            except NonFiniteGradientError as e:
                logger.warning(f"Skipping update: {e}")
        epoch_losses.append(total / len(pairs))
        logger.debug(f"{kind.value} epoch {epoch + 1}/{cfg.epochs}: loss {epoch_losses[-1]:.6g}")
    return TrainResult(model=model, epoch_losses=epoch_losses)


def evaluate(model: PredictorModel, examples: Sequence[WindowedExample]) -> float:
    """Mean normalized loss of a frozen model."""
    if not examples:
        raise DataError("cannot evaluate on an empty example list")
    losses = [model.loss(*example_arrays(ex)) for ex in examples]
    return float(np.mean(losses))


def _relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    num = float(np.linalg.norm(analytic - numeric))
    den = max(float(np.linalg.norm(analytic) + np.linalg.norm(numeric)), 1e-12)
    return num / den


def grad_check(
    kind: ModelKind | str,
    seed: int,
    epsilon: float = 1e-5,
    t_w: int = 10,
    order: int = DEFAULT_ORDER,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Parameters and the window are random; the target sits 0.5 away from the
    prediction so the loss gradient is never zero. Errors are per parameter array.
    """
    kind = ModelKind.parse(kind)
    rng = as_generator(seed)
    model = init_model(kind, t_w, rng, order=order)
    if kind is ModelKind.LR:
        model = model.with_params(
            {name: rng.normal(0.0, 0.1, size=p.shape) for name, p in model.params.items()}
        )
    window = rng.uniform(0.1, 0.9, size=t_w)
    pred = model.predict(window)
    target = pred - 0.5 if pred > 0.5 else pred + 0.5

    _, analytic = model.gradients(window, target)
    flat = model.flat_params()
    numeric_flat = np.empty_like(flat)
    for i in range(flat.size):
        plus = flat.copy()
        plus[i] += epsilon
        minus = flat.copy()
        minus[i] -= epsilon
        numeric_flat[i] = (
            model.from_flat(plus).loss(window, target) - model.from_flat(minus).loss(window, target)
        ) / (2.0 * epsilon)
    numeric = model.from_flat(numeric_flat).params
    worst = max(_relative_error(analytic[name], numeric[name]) for name in model.params)
    logger.debug(f"grad_check {kind.value} seed={seed}: {worst:.3g}")
    return worst
