"""Experience reservoir with fixed-probability replacement.

While below capacity every tuple is appended.  Once full, each incoming tuple
replaces a uniformly chosen resident with probability ``p_replace`` and is
dropped otherwise, so resident ages are geometrically weighted toward recent
play.
"""

from __future__ import annotations

import numpy as np

BETA_RESERVOIR = 2.0
GAMES_CAPACITY = 32_000


def replace_probability(beta: float = BETA_RESERVOIR) -> float:
    return 1.0 / beta


class Reservoir:
    def __init__(self, capacity: int, feature_dim: int, num_actions: int,
                 p_replace: float = replace_probability()):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        if not 0.0 <= p_replace <= 1.0:
            raise ValueError("p_replace must lie in [0, 1]")
        self.capacity = int(capacity)
        self.p_replace = float(p_replace)
        self.feature_dim = feature_dim
        self.num_actions = num_actions
        self.size = 0
        self.inserted = 0
        # storage grows on demand up to capacity
        alloc = min(self.capacity, 1024)
        self.features = np.zeros((alloc, feature_dim), dtype=np.float32)
        self.masks = np.zeros((alloc, num_actions), dtype=bool)
        self.targets = np.zeros((alloc, num_actions), dtype=np.float64)
        self.stamps = np.zeros(alloc, dtype=np.int64)  # insertion index of each resident

    def __len__(self) -> int:
        return self.size

    @property
    def full(self) -> bool:
        return self.size >= self.capacity

    def _grow(self):
        alloc = min(self.capacity, 2 * len(self.stamps))
        for name in ("features", "masks", "targets", "stamps"):
            old = getattr(self, name)
            new = np.zeros((alloc,) + old.shape[1:], dtype=old.dtype)
            new[: len(old)] = old
            setattr(self, name, new)

    def _put(self, slot: int, item):
        self.features[slot] = item.features
        self.masks[slot] = item.mask
        self.targets[slot] = item.target
        self.stamps[slot] = self.inserted

    def insert(self, batch, rng) -> "Reservoir":
        for item in batch:
            if self.size < self.capacity:
                if self.size == len(self.stamps):
                    self._grow()
                self._put(self.size, item)
                self.size += 1
            elif rng.random() < self.p_replace:
                self._put(int(rng.integers(self.capacity)), item)
            self.inserted += 1
        return self

    def sample(self, n: int, rng):
        if self.size == 0:
            raise ValueError("cannot sample from an empty reservoir")
        idx = rng.integers(self.size, size=n)
        return self.features[idx], self.masks[idx], self.targets[idx]


def reservoir_insert(res: Reservoir, batch, rng) -> Reservoir:
    return res.insert(batch, rng)
