"""Online Outcome Sampling over the implicit game interface.

One episode samples a single root-to-terminal history.  Tabled infosets are
updated with importance-weighted counterfactual regrets (updating player) or
average-strategy increments (the other player); the first untabled infoset
met is added and everything below it follows the playout policy.

Episodes are generators: whenever a playout needs a network evaluation they
yield a :class:`PlayoutRequest` and expect the action distribution back.
This lets a driver interleave many searches and evaluate their requests in
one batch.  Every random draw takes exactly one uniform from ``rng.random()``
(one for the targeting coin, one per visited node), a discipline the
compiled engine in :mod:`exit_oos.oos.fast` reproduces.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ..games.base import CHANCE, TERMINAL, GameError, MatchView, TargetingMode
from .core import (NodeStats, SearchConfig, SearchTree, average_strategy, ema_update, explore_mix, rm_list,
                   sample_index)

_CHANCE, _TREE, _PLAYOUT = 0, 1, 2


class PlayoutRequest(NamedTuple):
    features: np.ndarray
    mask: np.ndarray


class UniformPlayout:
    """Uniform random playouts; never needs the network."""

    needs_features = False

    def __call__(self, features, mask):
        mask = np.asarray(mask, dtype=np.float64)
        return mask / mask.sum()


class NetPlayout:
    """Playouts drawn from an apprentice network snapshot."""

    needs_features = True

    def __init__(self, params):
        self.params = params

    def __call__(self, features, mask):
        from ..apprentice.net import forward

        return forward(self.params, features, mask)

    def batch(self, features, masks):
        from ..apprentice.net import forward

        return forward(self.params, features, masks)


def simulate_episode(tree: SearchTree, game, observed: MatchView | None, cfg: SearchConfig,
                     mode: TargetingMode, playout, rng):
    """Generator running one OOS episode; see the module docstring."""
    i = tree.episodes % 2
    coin = rng.random()
    active = mode is not TargetingMode.NONE and observed is not None and len(observed.state.history) > 0
    targeted = active and coin < cfg.delta
    target_len = len(observed.state.history) if active else 0
    passed = not active
    eps, gam = cfg.epsilon, cfg.gamma

    s = game.initial_state()
    path = []
    pi = [1.0, 1.0]
    pi_c = 1.0
    s1 = 1.0
    s2 = 1.0
    playout_mode = False

    while s.to_move != TERMINAL:
        p = s.to_move
        legal = game._legal(s)
        n = len(legal)
        node = None
        if p == CHANCE:
            kind = _CHANCE
            true = [pr for _, pr in game._chance(s)]
            samp = true
        else:
            if not playout_mode:
                key = game.infoset_key(s, p)
                node = tree.table.get(key)
                if node is None:
                    tree.table[key] = NodeStats.zeros(n)
                    playout_mode = True
            if node is not None:
                kind = _TREE
                true = rm_list(node.regrets)
                mix = eps if p == i else gam
                samp = explore_mix(true, mix)
            else:
                kind = _PLAYOUT
                if playout.needs_features:
                    full = yield PlayoutRequest(game.encode(s, p), game.legal_mask(s))
                    true = [float(full[a]) for a in legal]
                else:
                    true = [1.0 / n] * n
                samp = true

        if passed:
            tdist = samp
        else:
            tsum = 0.0
            cons = [game.target_consistent(mode, observed, s, a) for a in legal]
            for k in range(n):
                if cons[k]:
                    tsum += samp[k]
            if tsum > 0.0:
                tdist = [samp[k] / tsum if cons[k] else 0.0 for k in range(n)]
            else:
                tdist = [0.0] * n

        u = rng.random()
        if targeted and not passed and tsum > 0.0:
            k = sample_index(tdist, u)
        else:
            k = sample_index(samp, u)

        if kind == _TREE:
            reach = pi[1 - i] * pi_c if p == i else pi[p]
            path.append((kind, p, node, true, k, reach, s2))
        else:
            path.append((kind, p, None, true, k, 0.0, 0.0))
        s1 *= tdist[k]
        s2 *= samp[k]
        if p == CHANCE:
            pi_c *= true[k]
        else:
            pi[p] *= true[k]
        s = game._next(s, legal[k])
        if not passed and len(s.history) >= target_len:
            passed = True
            if s1 > 0.0:
                tree.target_hits += 1

    u_term = game._returns(s)
    ui = u_term if i == 0 else -u_term
    r_old = tree.ema.r
    ema_update(tree.ema, s1, s2, cfg.beta_ema)

    x = 1.0
    for kind, p, node, true, k, reach, s2_pre in reversed(path):
        c = x
        x = true[k] * c
        if kind != _TREE:
            continue
        n = len(true)
        if p == i:
            w = ui * reach / (s2 * r_old)
            regrets = node.regrets
            for b in range(n):
                if b == k:
                    regrets[b] += w * (c - x)
                else:
                    regrets[b] += -w * x
        else:
            scale = reach / (s2_pre * r_old)
            avg = node.avg
            for b in range(n):
                avg[b] += scale * true[b]
    tree.episodes += 1
    return s


def drive(gen, playout):
    """Run an episode generator to completion, answering requests inline."""
    try:
        req = next(gen)
        while True:
            req = gen.send(playout(req.features, req.mask))
    except StopIteration as stop:
        return stop.value


def simulate_once(tree: SearchTree, game, observed: MatchView | None, cfg: SearchConfig,
                  playout, rng, mode: TargetingMode | None = None):
    mode = cfg.targeting_for(game) if mode is None else TargetingMode.parse(mode)
    return drive(simulate_episode(tree, game, observed, cfg, mode, playout, rng), playout)


def _check_decision(game, observed: MatchView):
    s = observed.state
    if s.to_move != observed.player:
        raise GameError("search requested away from the searcher's decision point")


def search_episodes(tree: SearchTree, game, observed: MatchView, cfg: SearchConfig, playout, rng,
                    simulations: int | None = None):
    """Generator form of :func:`run_search`; returns the decision distribution."""
    _check_decision(game, observed)
    mode = cfg.targeting_for(game)
    n = cfg.simulations if simulations is None else simulations
    for _ in range(n):
        yield from simulate_episode(tree, game, observed, cfg, mode, playout, rng)
    return decision_strategy(tree, game, observed, cfg)


def decision_strategy(tree: SearchTree, game, observed: MatchView, cfg: SearchConfig) -> np.ndarray:
    """Average strategy at the searcher's infoset, over legal actions."""
    s, me = observed.state, observed.player
    n = len(game._legal(s))
    node = tree.lookup(game.infoset_key(s, me))
    dist = average_strategy(node) if node is not None else np.full(n, 1.0 / n)
    if cfg.mix_output:
        dist = (1.0 - cfg.gamma) * dist + cfg.gamma / n
    return dist


def run_search(tree: SearchTree, game, observed: MatchView, cfg: SearchConfig, playout, rng,
               simulations: int | None = None) -> np.ndarray:
    return drive(search_episodes(tree, game, observed, cfg, playout, rng, simulations), playout)


def diagnostics(tree: SearchTree, game=None, observed: MatchView | None = None) -> dict:
    out = {"node_count": tree.node_count, "episodes": tree.episodes, "r": tree.ema.r,
           "target_hits": tree.target_hits}
    if game is not None and observed is not None and observed.state.to_move == observed.player:
        out["root_average_strategy"] = [float(v) for v in
                                        decision_strategy(tree, game, observed, SearchConfig())]
    return out
