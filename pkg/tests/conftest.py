"""Shared test fixtures."""

import os

import numpy as np
import pytest

from viewpoint_sim import config as config_mod
from viewpoint_sim import model_store
from viewpoint_sim.config import ExperimentConfig
from viewpoint_sim.core import Trace
from viewpoint_sim.outcome_log import get_outcome_log_path
from viewpoint_sim.traces import synth_traces


# Keep every test away from the real ~/.config and ~/.cache
@pytest.fixture(autouse=True)
def isolate_user_dirs(tmp_path, monkeypatch):
    """Point the config dir and model cache at temp dirs for all tests."""
    config_dir = tmp_path / ".config" / "viewpoint-sim"
    cache_dir = tmp_path / ".cache" / "viewpoint-sim"
    cache_dir.mkdir(parents=True)
    monkeypatch.setattr(config_mod, "DEFAULT_CONFIG_DIR", config_dir)
    monkeypatch.setattr(model_store, "get_cache_dir", lambda: cache_dir)
    monkeypatch.setattr(model_store, "_model_store", None)
    for name in list(os.environ):
        if name.startswith(config_mod.ENV_PREFIX):
            monkeypatch.delenv(name)
    yield cache_dir


@pytest.fixture
def temp_config_dir(tmp_path):
    """Create a temporary config directory."""
    config_dir = tmp_path / ".config" / "viewpoint-sim"
    config_dir.mkdir(parents=True, exist_ok=True)
    return config_dir


@pytest.fixture
def out_dir(tmp_path):
    """Output directory for a run."""
    return tmp_path / "out"


@pytest.fixture
def outcome_log_path(out_dir):
    return get_outcome_log_path(out_dir)


@pytest.fixture
def small_dataset():
    """2 videos x 4 users x 40 slots of synthetic traces."""
    return synth_traces(2, 4, 40, seed=0)


@pytest.fixture
def fast_config(out_dir):
    """Cheap experiment: LR predictor, 2 folds, 1 epoch, short window."""
    return ExperimentConfig.from_dict(
        {
            "seed": 3,
            "predictor": "lr",
            "window": {"t_w": 5},
            "train": {"epochs": 1, "order": 3},
            "plan": {"k_cross": 2},
            "synthetic": {"n_videos": 2, "users_per_video": 4, "t_tot": 40},
            "out_dir": str(out_dir),
        }
    )


def _make_trace(y, video_id=1, user_id=0, x=None, z=None) -> Trace:
    y = np.asarray(y, dtype=float)
    x = np.zeros_like(y) if x is None else np.asarray(x, dtype=float)
    z = np.zeros_like(y) if z is None else np.asarray(z, dtype=float)
    return Trace.from_arrays(video_id, user_id, x, y, z)


@pytest.fixture
def make_trace():
    """Build a trace from a yaw series (pitch and roll default to zero)."""
    return _make_trace
