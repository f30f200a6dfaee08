"""Proactive repetition scheme and its baselines.

A round is up to k_re back-to-back repetitions; the ACK for repetition l of round m
arrives (m - 1)(k_re + 3) + (l + 3) TTIs after the first transmission. Repetitions are
independent attempts: each consumes one draw from the success oracle.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional

from .errors import ConfigError, DataError

DEFAULT_TTI = 0.000125
DEFAULT_K_RE = 8


class Scheme(Enum):
    """Uplink delivery schemes."""

    PROACTIVE = "proactive"
    SINGLE_SHOT = "single-shot"
    GENIE = "genie"

    @classmethod
    def parse(cls, value: "Scheme | str") -> "Scheme":
        if isinstance(value, Scheme):
            return value
        try:
            return cls(str(value).strip().lower().replace("_", "-"))
        except ValueError:
            choices = ", ".join(s.value for s in cls)
            raise ConfigError(f"Unknown scheme '{value}' (expected one of {choices})") from None


@dataclass(frozen=True)
class RetransConfig:
    """k_re repetitions per round; t_th is the ACK latency budget in TTIs."""

    k_re: int = DEFAULT_K_RE
    tti: float = DEFAULT_TTI
    t_th: Optional[int] = None  # None -> two full rounds
    scheme: Scheme = Scheme.PROACTIVE

    def __post_init__(self):
        if self.k_re < 1:
            raise ConfigError(f"k_re must be >= 1, got {self.k_re}")
        if self.tti <= 0:
            raise ConfigError(f"tti must be > 0, got {self.tti}")
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        if self.t_th is None:
            object.__setattr__(self, "t_th", 2 * (self.k_re + 3))
        if self.scheme is Scheme.PROACTIVE and self.t_th < self.k_re + 3:
            raise ConfigError(f"t_th must be >= k_re + 3 = {self.k_re + 3}, got {self.t_th}")


@dataclass(frozen=True)
class UplinkOutcome:
    """Result of delivering one slot's viewpoint."""

    success: bool
    rounds: int
    repetition: Optional[int]  # set only on success
    latency_ttis: int
    attempts: int = 1
    tti: float = DEFAULT_TTI

    def __post_init__(self):
        if self.rounds < 1:
            raise DataError(f"rounds must be >= 1, got {self.rounds}")
        if self.success != (self.repetition is not None):
            raise DataError("repetition is set exactly when delivery succeeds")
        if self.latency_ttis < 0:
            raise DataError(f"latency must be >= 0, got {self.latency_ttis}")

    @property
    def latency_seconds(self) -> float:
        return self.latency_ttis * self.tti

    def to_dict(self) -> dict:
        return {
            "success": self.success,
            "rounds": self.rounds,
            "repetition": self.repetition,
            "latency_ttis": self.latency_ttis,
            "attempts": self.attempts,
        }


def proactive_latency(m: int, l: int, k_re: int) -> int:
    """TTIs until the ACK of repetition l in round m."""
    if k_re < 1:
        raise ValueError(f"k_re must be >= 1, got {k_re}")
    if m < 1:
        raise ValueError(f"round m must be >= 1, got {m}")
    if not 1 <= l <= k_re:
        raise ValueError(f"repetition l must be in 1..{k_re}, got {l}")
    return (m - 1) * (k_re + 3) + (l + 3)


def max_repetitions(cfg: RetransConfig) -> int:
    """Repetitions whose ACK fits within t_th (at least 1)."""
    full_rounds, rest = divmod(cfg.t_th, cfg.k_re + 3)
    return max(full_rounds * cfg.k_re + max(rest - 3, 0), 1)


def _next_draw(draws) -> bool:
    try:
        return bool(next(draws))
    except StopIteration:
        raise DataError("success oracle exhausted before the latency budget") from None


def run_proactive(success_oracle: Iterable[bool], cfg: RetransConfig) -> UplinkOutcome:
    """Repeat until ACK; give up before any repetition whose ACK would exceed t_th.

    On failure the whole budget has elapsed, so the latency is t_th.
    """
    draws = iter(success_oracle)
    attempts = 0
    last_round = 1
    m = 1
    while True:
        for l in range(1, cfg.k_re + 1):
            latency = proactive_latency(m, l, cfg.k_re)
            if latency > cfg.t_th:
                return UplinkOutcome(False, last_round, None, cfg.t_th, attempts, cfg.tti)
            attempts += 1
            last_round = m
            if _next_draw(draws):
                return UplinkOutcome(True, m, l, latency, attempts, cfg.tti)
        m += 1


def run_single_shot(success_oracle: Iterable[bool], cfg: RetransConfig) -> UplinkOutcome:
    """One transmission, no retry."""
    ok = _next_draw(iter(success_oracle))
    latency = proactive_latency(1, 1, cfg.k_re)
    return UplinkOutcome(ok, 1, 1 if ok else None, latency, 1, cfg.tti)


def run_genie(cfg: RetransConfig) -> UplinkOutcome:
    """Idealized delivery: always succeeds, no latency."""
    return UplinkOutcome(True, 1, 1, 0, 0, cfg.tti)


def deliver(
    scheme: Scheme | str, success_oracle: Iterable[bool], cfg: RetransConfig
) -> UplinkOutcome:
    scheme = Scheme.parse(scheme)
    if scheme is Scheme.PROACTIVE:
        return run_proactive(success_oracle, cfg)
    if scheme is Scheme.SINGLE_SHOT:
        return run_single_shot(success_oracle, cfg)
    return run_genie(cfg)
