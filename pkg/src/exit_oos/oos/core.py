"""Tabular pieces of Online Outcome Sampling shared by both search engines."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..games.base import TargetingMode


@dataclass
class SearchConfig:
    epsilon: float = 0.4  # exploration at the updating player's nodes
    delta: float = 0.9  # probability an episode is targeted
    gamma: float = 0.01  # opponent mistake floor
    beta_ema: float = 0.99  # decay of the targeting-ratio average
    simulations: int = 10_000  # episodes per decision
    targeting: TargetingMode | None = None  # None -> the game's default
    mix_output: bool = False  # blend the returned strategy with the gamma floor

    def __post_init__(self):
        for name in ("epsilon", "delta", "gamma"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if not 0.0 < self.beta_ema < 1.0:
            raise ValueError("beta_ema must lie in (0, 1)")
        if self.simulations < 0:
            raise ValueError("simulations must be non-negative")
        if self.targeting is not None:
            self.targeting = TargetingMode.parse(self.targeting)

    def targeting_for(self, game) -> TargetingMode:
        mode = self.targeting if self.targeting is not None else game.default_targeting
        if mode not in game.targeting_modes:
            raise ValueError(f"{game.game_id} does not support {mode.value} targeting")
        return mode


def regret_matching(regrets) -> np.ndarray:
    r = np.asarray(regrets, dtype=np.float64)
    if r.size == 0:
        raise ValueError("regret_matching needs at least one action")
    pos = np.maximum(r, 0.0)
    total = pos.sum()
    if total > 0.0:
        return pos / total
    return np.full(r.size, 1.0 / r.size)


def rm_list(regrets: list) -> list:
    """List version of :func:`regret_matching` for the pure-Python engine."""
    n = len(regrets)
    total = 0.0
    for v in regrets:
        if v > 0.0:
            total += v
    if total > 0.0:
        return [v / total if v > 0.0 else 0.0 for v in regrets]
    return [1.0 / n] * n


@dataclass
class NodeStats:
    regrets: list
    avg: list

    @classmethod
    def zeros(cls, n: int) -> "NodeStats":
        return cls([0.0] * n, [0.0] * n)

    @property
    def action_count(self) -> int:
        return len(self.regrets)


def average_strategy(node) -> np.ndarray:
    """Normalised average-strategy numerators; uniform when nothing accrued."""
    num = np.asarray(node.avg if isinstance(node, NodeStats) else node, dtype=np.float64)
    total = num.sum()
    if total > 0.0:
        return num / total
    return np.full(num.size, 1.0 / num.size)


@dataclass
class EmaRatio:
    """Running estimate of E[s1 / s2], targeted over untargeted sample probability."""

    r: float = 1.0


def ema_update(ema: EmaRatio, s1: float, s2: float, beta_ema: float) -> EmaRatio:
    if s2 <= 0.0:
        raise ValueError("untargeted sample probability must be positive")
    ema.r = beta_ema * ema.r + (1.0 - beta_ema) * (s1 / s2)
    return ema


@dataclass
class SearchTree:
    """Both players' infosets in one table; nodes are only ever added."""

    table: dict = field(default_factory=dict)
    ema: EmaRatio = field(default_factory=EmaRatio)
    episodes: int = 0
    target_hits: int = 0

    @property
    def node_count(self) -> int:
        return len(self.table)

    def lookup(self, key: bytes):
        return self.table.get(key)


def explore_mix(strategy, mix: float) -> list:
    """``(1 - mix) * strategy + mix * uniform``: epsilon exploration or the gamma floor."""
    n = len(strategy)
    return [(1.0 - mix) * x + mix / n for x in strategy]


def sample_index(probs, u: float) -> int:
    """Inverse-CDF draw; ``u`` is a uniform in [0, 1)."""
    acc = 0.0
    last = 0
    for i, p in enumerate(probs):
        if p > 0.0:
            acc += p
            last = i
            if u < acc:
                return i
    return last


class UniformStream:
    """Pre-drawn uniforms consumed in order; lets two engines share one stream."""

    def __init__(self, buffer):
        self.buffer = np.ascontiguousarray(buffer, dtype=np.float64)
        self.pos = 0

    def random(self) -> float:
        v = self.buffer[self.pos]
        self.pos += 1
        return float(v)
