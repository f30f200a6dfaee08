"""Experiment configuration: defaults, JSON config files and dotted overrides.

Resolution order, lowest first: dataclass defaults, config file, environment
(``VIEWPOINT_SIM_<FLAG>``, applied by the CLI), explicit command-line flags.
"""

import copy
import dataclasses
import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Optional

from .channel import ChannelConfig
from .core import Axis, Imputation, WindowConfig
from .errors import ConfigError
from .harness import FoldPlan, Regime
from .models import DEFAULT_ONLINE_LEARNING_RATE, ModelKind
from .retransmission import RetransConfig, Scheme
from .traces import SynthConfig
from .training import TrainConfig

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_DIR = Path.home() / ".config" / "viewpoint-sim"
ENV_PREFIX = "VIEWPOINT_SIM_"


def get_config_dir() -> Path:
    """Get or create the config directory."""
    config_dir = DEFAULT_CONFIG_DIR
    config_dir.mkdir(parents=True, exist_ok=True)
    return config_dir


def load_config(path: Optional[str | Path] = None) -> dict:
    """Load a JSON config; the default file may be absent (returns {}), an explicit one may not."""
    if path is None:
        config_file = get_config_dir() / "config.json"
        if not config_file.exists():
            return {}
    else:
        config_file = Path(path).expanduser()
        if not config_file.exists():
            raise FileNotFoundError(f"Config file not found: {config_file}")
    try:
        with open(config_file, encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{config_file}: invalid JSON ({e})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{config_file}: top level must be an object")
    # A saved report carries its configuration under "config".
    if "config" in data and "results" in data:
        data = data["config"]
    return data


# Per-section converters for values that are not plain JSON scalars.
_SECTIONS = {
    "window": (WindowConfig, {"dims": lambda v: tuple(Axis.parse(a) for a in v)}),
    "train": (TrainConfig, {}),
    "channel": (ChannelConfig, {}),
    "retrans": (RetransConfig, {"scheme": Scheme.parse}),
    "plan": (FoldPlan, {"regime": Regime.parse}),
    "synthetic": (SynthConfig, {}),
}
_TRAIN_HIDDEN = frozenset({"seed"})  # train.seed always follows the root seed


def _plain(value: Any) -> Any:
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (tuple, list)):
        return [_plain(v) for v in value]
    return value


def _section_to_dict(obj, hidden: frozenset[str] = frozenset()) -> dict:
    return {
        f.name: _plain(getattr(obj, f.name))
        for f in dataclasses.fields(obj)
        if f.name not in hidden
    }


def _section_from_dict(name: str, data: Any, extra: Optional[dict] = None):
    cls, converters = _SECTIONS[name]
    if not isinstance(data, dict):
        raise ConfigError(f"config section '{name}' must be an object")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"Unknown keys in '{name}': {', '.join(sorted(unknown))}")
    kwargs = {}
    for key, value in data.items():
        kwargs[key] = converters[key](value) if key in converters else value
    kwargs.update(extra or {})
    try:
        return cls(**kwargs)
    except TypeError as e:
        raise ConfigError(f"config section '{name}': {e}") from None


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one run needs; ``to_dict`` is an exact, re-loadable echo."""

    seed: int = 0
    predictor: ModelKind = ModelKind.GRU
    data: Optional[str] = None  # trace CSV; None means synthetic
    synthetic: SynthConfig = field(default_factory=SynthConfig)
    window: WindowConfig = field(default_factory=WindowConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    retrans: RetransConfig = field(default_factory=RetransConfig)
    plan: FoldPlan = field(default_factory=FoldPlan)
    imputation: Imputation = Imputation.HOLD
    online_learning_rate: Optional[float] = None  # None: per-predictor default, see online_rate
    shared_model: bool = False
    compare_offline: bool = True
    compare_schemes: bool = False
    sweep_windows: tuple[int, ...] = ()
    sweep_users: tuple[int, ...] = ()
    out_dir: str = "viewpoint-sim-out"

    def __post_init__(self):
        try:
            valid = int(self.seed) == self.seed and self.seed >= 0
        except (TypeError, ValueError):
            valid = False
        if not valid or isinstance(self.seed, bool):
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed!r}")
        object.__setattr__(self, "predictor", ModelKind.parse(self.predictor))
        object.__setattr__(self, "imputation", _parse_imputation(self.imputation))
        if self.train.seed != self.seed:
            object.__setattr__(self, "train", dataclasses.replace(self.train, seed=self.seed))
        if self.online_learning_rate is not None and not 0.0 <= self.online_learning_rate <= 1.0:
            raise ConfigError(
                f"online_learning_rate must be in [0, 1], got {self.online_learning_rate}"
            )
        for name in ("sweep_windows", "sweep_users"):
            values = tuple(int(v) for v in getattr(self, name))
            if any(v < 1 for v in values):
                raise ConfigError(f"{name} entries must be >= 1, got {list(values)}")
            object.__setattr__(self, name, values)
        if self.data is not None and not Path(self.data).expanduser().exists():
            raise FileNotFoundError(f"Trace file not found: {self.data}")

    @property
    def scheme(self) -> Scheme:
        return self.retrans.scheme

    @property
    def online_rate(self) -> float:
        """Step size of the per-slot updates.

        Unless set explicitly, neural predictors use DEFAULT_ONLINE_LEARNING_RATE and LR keeps
        its training rate: steps much above 1/||features||^2 make the power features diverge.
        """
        if self.online_learning_rate is not None:
            return self.online_learning_rate
        if self.predictor is ModelKind.LR:
            return self.train.learning_rate
        return DEFAULT_ONLINE_LEARNING_RATE

    def to_dict(self) -> dict:
        out = {
            "seed": self.seed,
            "predictor": self.predictor.value,
            "data": self.data,
            "imputation": self.imputation.value,
            "online_learning_rate": self.online_learning_rate,
            "shared_model": self.shared_model,
            "compare_offline": self.compare_offline,
            "compare_schemes": self.compare_schemes,
            "sweep_windows": list(self.sweep_windows),
            "sweep_users": list(self.sweep_users),
            "out_dir": self.out_dir,
        }
        for name in _SECTIONS:
            hidden = _TRAIN_HIDDEN if name == "train" else frozenset()
            out[name] = _section_to_dict(getattr(self, name), hidden)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"Unknown config keys: {', '.join(sorted(unknown))}")
        seed = data.get("seed", 0)
        kwargs: dict[str, Any] = {}
        for key, value in data.items():
            if key in _SECTIONS:
                section = dict(value) if isinstance(value, dict) else value
                extra = None
                if key == "train":
                    if isinstance(section, dict):
                        section.pop("seed", None)
                    extra = {"seed": seed}
                kwargs[key] = _section_from_dict(key, section, extra)
            elif key in ("sweep_windows", "sweep_users"):
                kwargs[key] = tuple(value or ())
            else:
                kwargs[key] = value
        return cls(**kwargs)

    def with_overrides(self, overrides: dict[str, Any]) -> "ExperimentConfig":
        """Apply dotted-key overrides such as {"window.t_w": 20}."""
        data = copy.deepcopy(self.to_dict())
        for dotted, value in overrides.items():
            target = data
            *parents, leaf = dotted.split(".")
            for part in parents:
                if part not in target or not isinstance(target[part], dict):
                    raise ConfigError(f"Unknown config section in '{dotted}'")
                target = target[part]
            target[leaf] = _plain(value)
        return ExperimentConfig.from_dict(data)


def _parse_imputation(value: Imputation | str) -> Imputation:
    if isinstance(value, Imputation):
        return value
    try:
        return Imputation(str(value).strip().lower())
    except ValueError:
        raise ConfigError(f"Unknown imputation '{value}' (expected hold or interpolate)") from None


def resolve_config(path: Optional[str | Path] = None) -> ExperimentConfig:
    """Defaults overlaid with a config file (explicit path or the default location)."""
    data = load_config(path)
    if data:
        logger.info(f"Loaded config ({len(data)} keys)")
    return ExperimentConfig.from_dict(data)


def sample_config() -> dict:
    """Config written by ``viewpoint-sim init``: every key at its default."""
    return ExperimentConfig().to_dict()
