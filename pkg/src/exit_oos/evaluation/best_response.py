"""Exact best response and exploitability over a game's flat tree.

Reach probabilities are pushed down level by level; values come back up
level by level, with the responder's choice made per infoset from the summed
reach-weighted action values of all its states.  Works because every infoset
sits at a single depth, which the tree builder checks.
"""

from __future__ import annotations

import numpy as np

from ..games.base import P1, P2, GameError
from ..games.tree import FlatTree, flat_tree, has_flat_tree


def profile_table(flat: FlatTree, profile) -> np.ndarray:
    """The profile's policy at every infoset, laid out by child position."""
    probs = profile.batch(flat.keys, flat.features, flat.masks)
    acts = flat.iset_actions
    table = np.take_along_axis(np.asarray(probs, dtype=np.float64), np.maximum(acts, 0), axis=1)
    table[acts < 0] = 0.0
    return table


def _child_pos(flat: FlatTree) -> np.ndarray:
    pos = getattr(flat, "_child_pos", None)
    if pos is None:
        pos = np.zeros(flat.num_nodes, dtype=np.int64)
        par = flat.parent[1:]
        pos[1:] = np.arange(1, flat.num_nodes) - flat.child_start[par]
        flat._child_pos = pos
    return pos


def br_value_table(flat: FlatTree, table: np.ndarray, br_player: int) -> float:
    """Best-response value of ``br_player`` against the policy ``table``."""
    if br_player not in (P1, P2):
        raise GameError("best response is defined for P1/P2 only")
    n = flat.num_nodes
    pos = _child_pos(flat)
    par = flat.parent
    ppl = flat.player

    factor = np.ones(n)
    has_par = par >= 0
    kid = np.nonzero(has_par)[0]
    pp = par[kid]
    chance = ppl[pp] == 2
    factor[kid[chance]] = flat.prob[kid[chance]]
    opp = ppl[pp] == 1 - br_player
    factor[kid[opp]] = table[flat.infoset[pp[opp]], pos[kid[opp]]]

    ls = flat.level_start
    reach = np.ones(n)
    for d in range(1, len(ls) - 1):
        lo, hi = ls[d], ls[d + 1]
        reach[lo:hi] = reach[par[lo:hi]] * factor[lo:hi]

    sign = 1.0 if br_player == P1 else -1.0
    value = np.where(ppl == -1, sign * flat.utility * reach, 0.0)
    A = max(flat.num_actions, int(flat.n_children.max()))
    for d in range(len(ls) - 3, -1, -1):
        lo, hi = ls[d], ls[d + 1]
        clo, chi = ls[d + 1], ls[d + 2]
        kids = np.arange(clo, chi)
        kp = par[clo:chi]
        level_val = np.bincount(kp - lo, weights=value[clo:chi], minlength=hi - lo)
        node_ids = np.arange(lo, hi)
        mine = ppl[lo:hi] == br_player
        if mine.any():
            mk = ppl[kp] == br_player
            ki = flat.infoset[kp[mk]]
            q = np.zeros((flat.num_infosets, A))
            np.add.at(q, (ki, pos[kids[mk]]), value[kids[mk]])
            nact = flat.iset_nact
            q[np.arange(A)[None, :] >= nact[:, None]] = -np.inf
            best = np.argmax(q, axis=1)
            me = node_ids[mine]
            level_val[mine] = value[flat.child_start[me] + best[flat.infoset[me]]]
        nonterm = ppl[lo:hi] != -1
        value[lo:hi][nonterm] = level_val[nonterm]
    return float(value[0])


def _flat_for(game) -> FlatTree:
    if not has_flat_tree(game):
        raise GameError(f"{game.game_id} is too large for exact best response")
    return flat_tree(game)


def best_response_value(game, profile, br_player: int) -> float:
    flat = _flat_for(game)
    return br_value_table(flat, profile_table(flat, profile), br_player)


def exploitability(game, profile) -> float:
    """Sum of both players' best-response values against ``profile``."""
    flat = _flat_for(game)
    table = profile_table(flat, profile)
    return br_value_table(flat, table, P1) + br_value_table(flat, table, P2)
