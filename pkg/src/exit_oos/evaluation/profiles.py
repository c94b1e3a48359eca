"""Behaviour-strategy profiles: infoset key -> distribution over actions.

Every profile returns a full-length vector over the game's action ids, zero
outside the legal mask.  Unknown keys fall back to uniform.
"""

from __future__ import annotations

import numpy as np

from ..oos.core import average_strategy


def uniform_on(mask) -> np.ndarray:
    m = np.asarray(mask, dtype=np.float64)
    return m / m.sum()


class StrategyProfile:
    def probs(self, key: bytes, features, mask) -> np.ndarray:
        return uniform_on(mask)

    def batch(self, keys, features, masks) -> np.ndarray:
        return np.stack([self.probs(k, f, m) for k, f, m in zip(keys, features, masks)])


class UniformProfile(StrategyProfile):
    pass


class TabularProfile(StrategyProfile):
    """Explicit table; values are full-length vectors or legal-order lists."""

    def __init__(self, table: dict):
        self.table = table

    def probs(self, key, features, mask):
        v = self.table.get(key)
        mask = np.asarray(mask, dtype=bool)
        if v is None:
            return uniform_on(mask)
        v = np.asarray(v, dtype=np.float64)
        if v.size == mask.size:
            out = np.where(mask, v, 0.0)
        else:
            out = np.zeros(mask.size)
            out[np.nonzero(mask)[0]] = v
        total = out.sum()
        return out / total if total > 0 else uniform_on(mask)

    @classmethod
    def from_search_tree(cls, tree) -> "TabularProfile":
        """Average strategies of every tabled infoset."""
        return cls({k: average_strategy(node) for k, node in tree.table.items()})


class NetProfile(StrategyProfile):
    def __init__(self, params):
        self.params = params

    def probs(self, key, features, mask):
        from ..apprentice.net import forward

        return forward(self.params, features, mask)

    def batch(self, keys, features, masks):
        from ..apprentice.net import forward

        return forward(self.params, features, masks)


class FunctionProfile(StrategyProfile):
    """Wraps ``fn(key, features, mask) -> vector`` (handy for hand-built strategies)."""

    def __init__(self, fn):
        self.fn = fn

    def probs(self, key, features, mask):
        return np.asarray(self.fn(key, features, mask), dtype=np.float64)
