"""JSON model snapshots and the on-disk cache of trained offline models.

A snapshot is self-describing: kind, constructor arguments, parameter shapes in
order, the flat parameter list and (optionally) the training loss curve. Floats
round-trip exactly through JSON.
"""

import hashlib
import json
import logging
import threading
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

from .errors import DataError
from .linear import LrModel
from .mlp import MlpModel
from .models import ModelKind, PredictorModel
from .recurrent import RnnModel
from .training import TrainResult

logger = logging.getLogger(__name__)

SNAPSHOT_FORMAT = 1

_MODEL_CLASSES: dict[ModelKind, type[PredictorModel]] = {
    ModelKind.LR: LrModel,
    ModelKind.NN: MlpModel,
    ModelKind.LSTM: RnnModel,
    ModelKind.GRU: RnnModel,
}


def get_cache_dir() -> Path:
    """Get cache directory."""
    cache_dir = Path.home() / ".cache" / "viewpoint-sim"
    cache_dir.mkdir(parents=True, exist_ok=True)
    return cache_dir


def model_to_dict(model: PredictorModel, epoch_losses: Optional[list[float]] = None) -> dict:
    shapes = model.expected_shapes()
    return {
        "format": SNAPSHOT_FORMAT,
        "kind": model.kind.value,
        "hyperparams": model.hyperparams(),
        "shapes": {name: list(shape) for name, shape in shapes.items()},
        "params": model.flat_params().tolist(),
        "epoch_losses": list(epoch_losses or []),
    }


def model_from_dict(data: dict) -> TrainResult:
    """Rebuild a model (and its loss curve) from a snapshot."""
    try:
        if data.get("format") != SNAPSHOT_FORMAT:
            raise DataError(f"unsupported snapshot format {data.get('format')}")
        kind = ModelKind.parse(data["kind"])
        flat = np.asarray(data["params"], dtype=float)
        params = {}
        offset = 0
        for name, shape in data["shapes"].items():
            size = int(np.prod(shape))
            params[name] = flat[offset : offset + size].reshape(shape)
            offset += size
        if offset != flat.size:
            raise DataError(f"snapshot has {flat.size} parameters, shapes need {offset}")
        model = _MODEL_CLASSES[kind](params=params, **data["hyperparams"])
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, DataError):
            raise
        raise DataError(f"malformed model snapshot: {e}") from None
    return TrainResult(model=model, epoch_losses=list(data.get("epoch_losses", [])))


def save_model(
    model: PredictorModel, path: str | Path, epoch_losses: Optional[list[float]] = None
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(model_to_dict(model, epoch_losses), f)
    return path


def load_model(path: str | Path) -> TrainResult:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Model snapshot not found: {path}")
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise DataError(f"{path}: invalid JSON ({e})") from None
    return model_from_dict(data)


class ModelStore:
    """Trained offline models keyed by a fingerprint of everything that shaped them.

    One JSON snapshot per key under ``<cache>/models``. A snapshot that fails to load
    is treated as a miss and retrained.
    """

    def __init__(self, root: Optional[Path] = None):
        self.root = Path(root) if root is not None else get_cache_dir() / "models"
        self.root.mkdir(parents=True, exist_ok=True)
        self.hits = 0
        self.misses = 0
        self._lock = threading.Lock()

    @staticmethod
    def fingerprint(**parts: Any) -> str:
        """SHA-256 over the canonical JSON of the parts."""
        blob = json.dumps(parts, sort_keys=True, default=str)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def path_for(self, key: str) -> Path:
        return self.root / f"{key}.json"

    def get(self, key: str) -> Optional[TrainResult]:
        path = self.path_for(key)
        if not path.exists():
            return None
        try:
            return load_model(path)
        except DataError as e:
            logger.warning(f"Ignoring unreadable cached model {path.name}: {e}")
            return None

    def put(self, key: str, result: TrainResult) -> None:
        with self._lock:
            save_model(result.model, self.path_for(key), result.epoch_losses)

    def get_or_train(self, key: str, trainer: Callable[[], TrainResult]) -> TrainResult:
        cached = self.get(key)
        if cached is not None:
            self.hits += 1
            logger.debug(f"Model cache hit {key[:12]}")
            return cached
        self.misses += 1
        result = trainer()
        try:
            self.put(key, result)
        except OSError as e:
            logger.warning(f"Failed to cache model {key[:12]}: {e}")
        return result

    def clear(self) -> int:
        """Delete every cached model; returns how many were removed."""
        removed = 0
        with self._lock:
            for path in self.root.glob("*.json"):
                path.unlink()
                removed += 1
        return removed

    def get_stats(self) -> dict:
        return {
            "models": len(list(self.root.glob("*.json"))),
            "hits": self.hits,
            "misses": self.misses,
            "path": str(self.root),
        }


_model_store: Optional[ModelStore] = None
_model_store_lock = threading.Lock()


def get_model_store() -> ModelStore:
    """Get the global model store instance (thread-safe)."""
    global _model_store
    if _model_store is None:
        with _model_store_lock:
            # Double-check locking pattern
            if _model_store is None:
                _model_store = ModelStore()
    return _model_store
