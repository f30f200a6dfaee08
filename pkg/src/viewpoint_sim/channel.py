"""Multi-antenna uplink: placement, Rayleigh fading, MRC combining and the rate test.

A single small base station (SBS) with M antennas sits at the centre of a square.
Every user transmits at the same power; all other users interfere in every TTI.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaincc

from .errors import ConfigError, DataError, DimensionMismatchError
from .rng import SeedLike, as_generator

# 2 MB/s read as megabytes per second
DEFAULT_RATE_THRESHOLD = 2 * 8e6


def dbm_to_watts(dbm):
    out = 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ChannelConfig:
    """Radio parameters; powers in dBm, rates in bit/s, lengths in metres."""

    antennas: int = 30
    alpha: float = 3.0
    noise_dbm: float = -110.0
    side: float = 100.0
    r_th: float = DEFAULT_RATE_THRESHOLD
    bandwidth: float = 10e6
    tx_power_dbm: float = 23.0
    n_users: int = 10  # users sharing the cell, test user included
    min_distance: float = 1.0

    def __post_init__(self):
        if self.antennas < 1:
            raise ConfigError(f"antennas must be >= 1, got {self.antennas}")
        if self.alpha <= 0:
            raise ConfigError(f"alpha must be > 0, got {self.alpha}")
        if self.side <= 0:
            raise ConfigError(f"side must be > 0, got {self.side}")
        if self.r_th <= 0:
            raise ConfigError(f"r_th must be > 0, got {self.r_th}")
        if self.bandwidth <= 0:
            raise ConfigError(f"bandwidth must be > 0, got {self.bandwidth}")
        if self.n_users < 1:
            raise ConfigError(f"n_users must be >= 1, got {self.n_users}")
        if self.min_distance <= 0:
            raise ConfigError(f"min_distance must be > 0, got {self.min_distance}")

    @property
    def noise_watts(self) -> float:
        return dbm_to_watts(self.noise_dbm)

    @property
    def tx_watts(self) -> float:
        return dbm_to_watts(self.tx_power_dbm)

    @property
    def sinr_threshold(self) -> float:
        """Smallest SINR whose rate meets r_th."""
        return 2.0 ** (self.r_th / self.bandwidth) - 1.0


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """One user's channel vector h = sqrt(d^-alpha) * g, g ~ CN(0, I_M)."""

    h: np.ndarray
    distance: float

    def __post_init__(self):
        h = np.array(self.h, dtype=complex)
        if h.ndim != 1 or h.size == 0:
            raise DimensionMismatchError(f"channel vector must be 1-D, got shape {h.shape}")
        if not np.all(np.isfinite(h)):
            raise DataError("channel vector has non-finite entries")
        h.setflags(write=False)
        object.__setattr__(self, "h", h)

    def __len__(self) -> int:
        return self.h.size


def distance_to_sbs(positions, cfg: ChannelConfig) -> np.ndarray:
    """Distance from each (x, y) to the square centre, floored at min_distance."""
    pos = np.atleast_2d(np.asarray(positions, dtype=float))
    centre = np.array([cfg.side / 2.0, cfg.side / 2.0])
    return np.maximum(np.linalg.norm(pos - centre, axis=1), cfg.min_distance)


def place_users(k_vr: int, cfg: ChannelConfig, seed: SeedLike) -> tuple[np.ndarray, np.ndarray]:
    """Uniform i.i.d. positions over the square; returns (positions (k, 2), distances (k,))."""
    if k_vr < 1:
        raise ConfigError(f"k_vr must be >= 1, got {k_vr}")
    rng = as_generator(seed)
    positions = rng.uniform(0.0, cfg.side, size=(k_vr, 2))
    return positions, distance_to_sbs(positions, cfg)


def _complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def draw_channel(distance: float, cfg: ChannelConfig, seed: SeedLike) -> ChannelRealization:
    """Fresh Rayleigh draw for one user and one TTI."""
    if distance < cfg.min_distance:
        raise ConfigError(f"distance must be >= {cfg.min_distance}, got {distance}")
    rng = as_generator(seed)
    gain = np.sqrt(float(distance) ** -cfg.alpha)
    return ChannelRealization(h=gain * _complex_normal(rng, cfg.antennas), distance=distance)


def draw_fading(
    distances: Sequence[float], cfg: ChannelConfig, rng: np.random.Generator, n_draws: int
) -> np.ndarray:
    """Block-fading draws for all users: shape (n_draws, K, M), one block per TTI."""
    d = np.asarray(distances, dtype=float)
    gain = np.sqrt(d**-cfg.alpha)[None, :, None]
    return gain * _complex_normal(rng, (n_draws, d.size, cfg.antennas))


def mrc_sinr(h_k, interferers: Sequence = (), noise: float = 1.0, tx_power: float = 1.0) -> float:
    """SINR of one user after maximum-ratio combining with u = h_k / ||h_k||.

    Args:
        h_k: Desired user's channel vector, length M.
        interferers: Channel vectors of the other users, each length M.
        noise: Noise power, linear.
        tx_power: Per-user transmit power, linear.

    Returns:
        p ||h_k||^2 / (p sum_i |u^H h_i|^2 + noise).

    Raises:
        DataError: If h_k is all zeros.
        DimensionMismatchError: If an interferer's shape differs from h_k.
    """
    h_k = np.asarray(h_k, dtype=complex)
    signal = float(np.vdot(h_k, h_k).real)
    if signal == 0.0:
        raise DataError("desired channel vector is all zeros")
    u = h_k / np.sqrt(signal)
    interference = 0.0
    for h_i in interferers:
        h_i = np.asarray(h_i, dtype=complex)
        if h_i.shape != h_k.shape:
            raise DimensionMismatchError(f"interferer shape {h_i.shape} != {h_k.shape}")
        interference += abs(np.vdot(u, h_i)) ** 2
    return tx_power * signal / (tx_power * interference + noise)


def mrc_sinr_batch(
    h: np.ndarray, noise: float, tx_power: float, user: int | None = None
) -> np.ndarray:
    """Vectorized mrc_sinr over (..., K, M) channels.

    Returns (..., K) SINRs, or (...,) for a single ``user``; every other user interferes.
    """
    h = np.asarray(h, dtype=complex)
    gram = np.einsum("...km,...im->...ki", h.conj(), h)
    power = np.abs(gram) ** 2
    norm2 = np.real(np.diagonal(gram, axis1=-2, axis2=-1))
    if np.any(norm2 == 0.0):
        raise DataError("desired channel vector is all zeros")
    cross = (power.sum(axis=-1) - np.diagonal(power, axis1=-2, axis2=-1)) / norm2
    sinr = tx_power * norm2 / (tx_power * cross + noise)
    return sinr if user is None else sinr[..., user]


def uplink_rate(sinr, cfg: ChannelConfig):
    """Shannon rate in bit/s."""
    out = cfg.bandwidth * np.log2(1.0 + np.asarray(sinr, dtype=float))
    return float(out) if out.ndim == 0 else out


def attempt_success(rate, cfg: ChannelConfig):
    """True where the rate reaches r_th (inclusive)."""
    out = np.asarray(rate, dtype=float) >= cfg.r_th
    return bool(out) if out.ndim == 0 else out


def success_probability(distance, cfg: ChannelConfig):
    """Interference-free per-TTI success probability.

    ||h||^2 d^alpha is Gamma(M, 1), so P(success) = Q(M, x_th d^alpha) with
    x_th = sinr_threshold * noise / tx_power.

    Args:
        distance: Distance to the base station in metres, scalar or array.
        cfg: Channel configuration supplying M, alpha, noise and power.

    Returns:
        A float for scalar input, otherwise an array of the same shape.
    """
    x_th = cfg.sinr_threshold * cfg.noise_watts / cfg.tx_watts
    d = np.asarray(distance, dtype=float)
    out = gammaincc(cfg.antennas, x_th * d**cfg.alpha)
    return float(out) if out.ndim == 0 else out
