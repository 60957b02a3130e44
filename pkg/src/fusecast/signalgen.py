"""Mock directional-signal oracle with tunable accuracy.

Stands in for a text-reading classifier: for each step it knows the realized
next-move direction and emits it with probability ``accuracy`` (otherwise one
of the two wrong classes, uniformly). Confidence is the softmax max over mock
logits, where the emitted class receives a larger logit boost when it matches
the realized direction than when it does not.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContractError


class Direction(enum.Enum):
    UP = 0
    DOWN = 1
    FLAT = 2


@dataclass(frozen=True)
class LlmSignal:
    direction: Direction
    one_hot: tuple[float, float, float]
    confidence: float
    usable: bool = True


@dataclass(frozen=True)
class SignalConfig:
    accuracy: float = 0.70
    flat_band: float = 0.001
    logit_boost_correct: float = 2.0
    logit_boost_wrong: float = 0.8
    logit_noise_std: float = 0.5
    seed: int = 11

    def __post_init__(self):
        if not 0.0 <= self.accuracy <= 1.0:
            raise ConfigError(f"accuracy must be in [0,1], got {self.accuracy}")
        if self.flat_band < 0:
            raise ConfigError(f"flat_band must be >= 0, got {self.flat_band}")
        if self.logit_noise_std < 0:
            raise ConfigError(f"logit_noise_std must be >= 0, got {self.logit_noise_std}")
        if self.seed < 0:
            raise ConfigError(f"seed must be unsigned, got {self.seed}")


def realized_direction(p_t: float, p_next: float, flat_band: float) -> Direction:
    """Direction of the relative return (p_next - p_t) / p_t against the
    flat band."""
    if p_t <= 0:
        raise ContractError(f"realized_direction: price must be positive, got {p_t}")
    ret = (p_next - p_t) / p_t
    if ret > flat_band:
        return Direction.UP
    if ret < -flat_band:
        return Direction.DOWN
    return Direction.FLAT


def encode_one_hot(d: Direction) -> tuple[float, float, float]:
    vec = [0.0, 0.0, 0.0]
    vec[d.value] = 1.0
    return tuple(vec)


def confidence_from_logits(logits: np.ndarray) -> float:
    """Max of the 3-class softmax; always in [1/3, 1]."""
    e = np.exp(logits - logits.max())
    return float(e.max() / e.sum())


def generate_signal(true_dir: Direction, cfg: SignalConfig, rng: np.random.Generator) -> LlmSignal:
    """Draw one signal; emitted class is forced to be the logit argmax."""
    if rng.random() < cfg.accuracy:
        emitted = true_dir
    else:
        others = [d for d in Direction if d is not true_dir]
        emitted = others[int(rng.integers(0, 2))]

    logits = rng.normal(0.0, cfg.logit_noise_std, 3)
    boost = cfg.logit_boost_correct if emitted is true_dir else cfg.logit_boost_wrong
    step = boost if boost > 0 else 1.0
    logits[emitted.value] += step
    while int(np.argmax(logits)) != emitted.value:
        logits[emitted.value] += step

    return LlmSignal(
        direction=emitted,
        one_hot=encode_one_hot(emitted),
        confidence=confidence_from_logits(logits),
    )


def signal_series(series, cfg: SignalConfig) -> list[LlmSignal]:
    """One signal per bar; signal t predicts the t -> t+1 move. The final bar
    gets an unusable flat placeholder (there is no next move to predict)."""
    bars = series.bars
    if len(bars) < 2:
        raise ContractError(f"signal_series needs >= 2 bars, got {len(bars)}")
    rng = np.random.default_rng(cfg.seed)
    out = []
    for t in range(len(bars) - 1):
        true_dir = realized_direction(bars[t].price, bars[t + 1].price, cfg.flat_band)
        out.append(generate_signal(true_dir, cfg, rng))
    out.append(
        LlmSignal(
            direction=Direction.FLAT,
            one_hot=encode_one_hot(Direction.FLAT),
            confidence=1.0 / 3.0,
            usable=False,
        )
    )
    return out
