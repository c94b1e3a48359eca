"""Compiled OOS over a flat game tree.

Same algorithm, update order and uniform-consumption discipline as
:mod:`exit_oos.oos.search`; fed the same uniform stream both engines produce
the same tables up to floating-point reassociation.  Targeting uses
precomputed node marks (ancestors-or-self of the targeted histories) in place
of the per-game consistency oracles, and network playouts read a policy table
evaluated for every infoset in one batch per parameter snapshot.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from ..games.base import TargetingMode
from ..games.tree import FlatTree
from .core import EmaRatio, NodeStats, SearchConfig, SearchTree, average_strategy
from .search import NetPlayout, UniformPlayout

_CHANCE, _TREE, _PLAYOUT = 0, 1, 2

# stats slots
R, EPISODES, NODES, HITS = 0, 1, 2, 3

@njit(cache=True)
def _sample(probs, n, u):
    acc = 0.0
    last = 0
    for k in range(n):
        p = probs[k]
        if p > 0.0:
            acc += p
            last = k
            if u < acc:
                return k
    return last

@njit(cache=True)
def run_episodes(player, child_start, n_children, prob, utility, infoset, depth, max_depth,
                 regrets, avg, in_tree, stats,
                 marks, target_depth, delta,
                 table, use_table,
                 eps, gam, beta,
                 uniforms, ptr, n_episodes, terminals):
    A = max(regrets.shape[1], n_children.max())
    path_node = np.empty(max_depth + 1, np.int64)
    path_kind = np.empty(max_depth + 1, np.int64)
    path_player = np.empty(max_depth + 1, np.int64)
    path_k = np.empty(max_depth + 1, np.int64)
    path_n = np.empty(max_depth + 1, np.int64)
    path_reach = np.empty(max_depth + 1, np.float64)
    path_s2 = np.empty(max_depth + 1, np.float64)
    path_true = np.empty((max_depth + 1, A), np.float64)
    samp = np.empty(A, np.float64)
    tdist = np.empty(A, np.float64)
    active = target_depth > 0

    for ep in range(n_episodes):
        i = int(stats[EPISODES]) % 2
        coin = uniforms[ptr]
        ptr += 1
        targeted = active and coin < delta
        passed = not active
        pi0 = 1.0
        pi1 = 1.0
        pi_c = 1.0
        s1 = 1.0
        s2 = 1.0
        playout_mode = False
        h = 0
        L = 0
        while player[h] >= 0:
            p = player[h]
            n = n_children[h]
            start = child_start[h]
            kind = _PLAYOUT
            iset = -1
            if p == 2:
                kind = _CHANCE
                for k in range(n):
                    path_true[L, k] = prob[start + k]
                    samp[k] = prob[start + k]
            else:
                iset = infoset[h]
                if not playout_mode:
                    if in_tree[iset]:
                        kind = _TREE
                    else:
                        in_tree[iset] = True
                        stats[NODES] += 1.0
                        playout_mode = True
                if kind == _TREE:
                    total = 0.0
                    for k in range(n):
                        v = regrets[iset, k]
                        if v > 0.0:
                            total += v
                    for k in range(n):
                        v = regrets[iset, k]
                        if total > 0.0:
                            path_true[L, k] = v / total if v > 0.0 else 0.0
                        else:
                            path_true[L, k] = 1.0 / n
                    mix = eps if p == i else gam
                    for k in range(n):
                        samp[k] = (1.0 - mix) * path_true[L, k] + mix / n
                else:
                    for k in range(n):
                        if use_table:
                            path_true[L, k] = table[iset, k]
                        else:
                            path_true[L, k] = 1.0 / n
                        samp[k] = path_true[L, k]

            tsum = 0.0
            if passed:
                for k in range(n):
                    tdist[k] = samp[k]
            else:
                for k in range(n):
                    if marks[start + k]:
                        tsum += samp[k]
                for k in range(n):
                    if tsum > 0.0 and marks[start + k]:
                        tdist[k] = samp[k] / tsum
                    else:
                        tdist[k] = 0.0

            u = uniforms[ptr]
            ptr += 1
            if targeted and (not passed) and tsum > 0.0:
                k = _sample(tdist, n, u)
            else:
                k = _sample(samp, n, u)

            path_node[L] = iset
            path_kind[L] = kind
            path_player[L] = p
            path_k[L] = k
            path_n[L] = n
            if kind == _TREE:
                if p == i:
                    path_reach[L] = (pi1 if i == 0 else pi0) * pi_c
                else:
                    path_reach[L] = pi0 if p == 0 else pi1
                path_s2[L] = s2
            L += 1
            s1 *= tdist[k]
            s2 *= samp[k]
            if p == 2:
                pi_c *= path_true[L - 1, k]
            elif p == 0:
                pi0 *= path_true[L - 1, k]
            else:
                pi1 *= path_true[L - 1, k]
            h = start + k
            if (not passed) and depth[h] >= target_depth:
                passed = True
                if s1 > 0.0:
                    stats[HITS] += 1.0

        terminals[ep] = h
        u_term = utility[h]
        ui = u_term if i == 0 else -u_term
        r_old = stats[R]
        stats[R] = beta * r_old + (1.0 - beta) * (s1 / s2)

        x = 1.0
        for j in range(L - 1, -1, -1):
            k = path_k[j]
            c = x
            x = path_true[j, k] * c
            if path_kind[j] != _TREE:
                continue
            iset = path_node[j]
            n = path_n[j]
            p = path_player[j]
            if p == i:
                w = ui * path_reach[j] / (s2 * r_old)
                for b in range(n):
                    if b == k:
                        regrets[iset, b] += w * (c - x)
                    else:
                        regrets[iset, b] += -w * x
            else:
                scale = path_reach[j] / (path_s2[j] * r_old)
                for b in range(n):
                    avg[iset, b] += scale * path_true[j, b]
        stats[EPISODES] += 1.0
    return ptr

def policy_table(flat: FlatTree, params) -> np.ndarray:
    """Network policy at every infoset, laid out by child position."""
    from ..apprentice.net import forward

    probs = forward(params, flat.features, flat.masks)
    acts = flat.iset_actions
    table = np.take_along_axis(probs, np.maximum(acts, 0), axis=1)
    table[acts < 0] = 0.0
    return np.ascontiguousarray(table, dtype=np.float64)

class FastSearch:
    """OOS search state for one match on a game with a flat tree."""

    def __init__(self, game, flat: FlatTree, cfg: SearchConfig, playout=None):
        self.game = game
        self.flat = flat
        self.cfg = cfg
        self.mode = cfg.targeting_for(game)
        self._table = np.zeros((1, flat.num_actions))
        self._use_table = False
        self._playout_ref = None
        self._target_cache = (None, None, np.zeros(1, dtype=np.bool_), 0)
        self.set_playout(playout)
        self.reset()

    def reset(self):
        n, a = self.flat.num_infosets, self.flat.num_actions
        self.regrets = np.zeros((n, a))
        self.avg = np.zeros((n, a))
        self.in_tree = np.zeros(n, dtype=np.bool_)
        self.stats = np.array([1.0, 0.0, 0.0, 0.0])

    def set_playout(self, playout):
        if playout is None or isinstance(playout, UniformPlayout):
            self._use_table = False
            self._playout_ref = None
            return
        if not isinstance(playout, NetPlayout):
            raise TypeError("fast search supports uniform or network playouts")
        if self._playout_ref is not playout.params:
            self._table = policy_table(self.flat, playout.params)
            self._playout_ref = playout.params
        self._use_table = True

    def set_table(self, table: np.ndarray):
        """Install a precomputed playout table (shared across searches)."""
        self._table = table
        self._use_table = True

    # -- targeting ------------------------------------------------------

    def _target(self, observed):
        if observed is None or self.mode is TargetingMode.NONE or not observed.state.history:
            return np.zeros(1, dtype=np.bool_), 0
        key = (tuple(observed.state.history), observed.player)
        if self._target_cache[0] == key:
            return self._target_cache[2], self._target_cache[3]
        node = self.flat.node_of(observed.state.history)
        marks = self.flat.target_marks(node, observed.player, self.mode)
        depth = int(self.flat.depth[node])
        self._target_cache = (key, node, marks, depth)
        return marks, depth

    # -- running --------------------------------------------------------

    def simulate(self, observed, n: int, rng) -> np.ndarray:
        """Run ``n`` episodes; returns the terminal node of each."""
        marks, tdepth = self._target(observed)
        f = self.flat
        per = f.max_depth + 1
        if hasattr(rng, "buffer"):
            uniforms, ptr = rng.buffer, rng.pos
        else:
            uniforms, ptr = rng.random(n * per), 0
        terminals = np.empty(n, dtype=np.int64)
        cfg = self.cfg
        end = run_episodes(f.player, f.child_start, f.n_children, f.prob, f.utility, f.infoset,
                           f.depth, f.max_depth, self.regrets, self.avg, self.in_tree, self.stats,
                           marks, tdepth, cfg.delta, self._table, self._use_table,
                           cfg.epsilon, cfg.gamma, cfg.beta_ema, uniforms, ptr, n, terminals)
        if hasattr(rng, "buffer"):
            rng.pos = end
        return terminals

    def decision_strategy(self, observed) -> np.ndarray:
        s, me = observed.state, observed.player
        n = len(self.game._legal(s))
        iid = self.flat.key_index().get(self.game.infoset_key(s, me))
        if iid is None or not self.in_tree[iid]:
            dist = np.full(n, 1.0 / n)
        else:
            dist = average_strategy(self.avg[iid, :n])
        if self.cfg.mix_output:
            dist = (1.0 - self.cfg.gamma) * dist + self.cfg.gamma / n
        return dist

    def run(self, observed, rng, simulations: int | None = None) -> np.ndarray:
        from ..games.base import GameError

        if observed.state.to_move != observed.player:
            raise GameError("search requested away from the searcher's decision point")
        n = self.cfg.simulations if simulations is None else simulations
        if n:
            self.simulate(observed, n, rng)
        return self.decision_strategy(observed)

    @property
    def node_count(self) -> int:
        return int(self.stats[NODES])

    @property
    def episodes(self) -> int:
        return int(self.stats[EPISODES])

    def to_search_tree(self) -> SearchTree:
        """Copy the tabled infosets into the dictionary form used by the reference engine."""
        tree = SearchTree(ema=EmaRatio(float(self.stats[R])), episodes=self.episodes,
                          target_hits=int(self.stats[HITS]))
        for iid in np.nonzero(self.in_tree)[0]:
            n = int(self.flat.iset_nact[iid])
            tree.table[self.flat.keys[iid]] = NodeStats(list(self.regrets[iid, :n]), list(self.avg[iid, :n]))
        return tree

    def diagnostics(self, observed=None) -> dict:
        out = {"node_count": self.node_count, "episodes": self.episodes, "r": float(self.stats[R]),
               "target_hits": int(self.stats[HITS])}
        if observed is not None and observed.state.to_move == observed.player:
            out["root_average_strategy"] = [float(v) for v in self.decision_strategy(observed)]
        return out
