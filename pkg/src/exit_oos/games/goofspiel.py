"""Imperfect-information Goofspiel with N cards.

Prize cards are revealed in the fixed order 0, 1, ..., N-1.  The two
simultaneous bids of a round are serialised: P1 bids, then P2 bids without
seeing it.  After each round both players only learn who won it.
"""

from __future__ import annotations

from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .base import EMPTY_OBS, P1, P2, PUBLIC, TERMINAL, Game, MatchView, TargetingMode, add_obs

WIN, LOSS, DRAW = 0, 1, 2  # round outcome from the observer's side


def round_outcome(mine: int, theirs: int) -> int:
    if mine > theirs:
        return WIN
    if mine < theirs:
        return LOSS
    return DRAW


class GoofState(NamedTuple):
    history: tuple
    to_move: int
    obs: tuple
    bids: tuple  # (p1 bids, p2 bids)
    points: tuple


class Goofspiel(Game):
    default_targeting = TargetingMode.IST
    targeting_modes = frozenset({TargetingMode.NONE, TargetingMode.IST})

    def __init__(self, n: int = 6, margin_utility: bool = False):
        if n < 1:
            raise ValueError("Goofspiel needs at least one card")
        self.n = n
        self.margin_utility = margin_utility
        self.game_id = f"goof{n}"
        self.num_actions = n
        self.encoding_dim = n + 3 * n + n

    def initial_state(self):
        return GoofState((), P1, EMPTY_OBS, ((), ()), (0, 0))

    def _legal(self, s):
        used = s.bids[s.to_move]
        return [c for c in range(self.n) if c not in used]

    def _chance(self, s):
        raise AssertionError("Goofspiel has no chance nodes")

    def _next(self, s, a):
        history = s.history + (a,)
        me = s.to_move
        bids = list(s.bids)
        bids[me] = bids[me] + (a,)
        bids = tuple(bids)
        obs = add_obs(s.obs, (me,), bytes((ord("b"), a)))
        if me == P1:
            return GoofState(history, P2, obs, bids, s.points)
        b1, b2 = bids[0][-1], bids[1][-1]
        prize = len(bids[1]) - 1
        out = round_outcome(b1, b2)
        points = s.points
        if out == WIN:
            points = (points[0] + prize, points[1])
        elif out == LOSS:
            points = (points[0], points[1] + prize)
        obs = add_obs(obs, (P1, PUBLIC), bytes((ord("o"), out)))
        obs = add_obs(obs, (P2,), bytes((ord("o"), round_outcome(b2, b1))))
        to_move = TERMINAL if len(bids[1]) == self.n else P1
        return GoofState(history, to_move, obs, bids, points)

    def _returns(self, s):
        diff = s.points[0] - s.points[1]
        if self.margin_utility:
            return float(diff)
        return float((diff > 0) - (diff < 0))

    def outcomes(self, s, player: int) -> list[int]:
        return [rec[1] for rec in s.obs[player] if rec[0] == ord("o")]

    def _encode(self, s, player):
        n = self.n
        x = np.zeros(self.encoding_dim, dtype=np.float32)
        for c in range(n):
            if c not in s.bids[player]:
                x[c] = 1.0
        outs = self.outcomes(s, player)
        for r, o in enumerate(outs):
            x[n + 3 * r + o] = 1.0
        rnd = len(outs)
        if rnd < n:
            x[4 * n + rnd] = 1.0
        return x

    def _feasible(self, mode, observed: MatchView, child):
        me = observed.player
        opp = 1 - me
        real = observed.state
        my_bids = real.bids[me]
        outs = self.outcomes(real, me)
        opp_used = child.bids[opp]
        # rounds whose outcome is known but whose opponent card is not yet placed
        pending = []
        for r in range(len(opp_used), len(outs)):
            pending.append((my_bids[r], outs[r]))
        # a placed opponent bid in an observed round not yet closed in child
        done = len(child.bids[me]) if opp == P1 else len(opp_used)
        for r in range(done, min(len(opp_used), len(outs))):
            if round_outcome(my_bids[r], opp_used[r]) != outs[r]:
                return False
        remaining = 0
        for c in range(self.n):
            if c not in opp_used:
                remaining |= 1 << c
        return _assignable(remaining, tuple(pending))

    def action_name(self, a: int) -> str:
        return f"bid {a}"

    def _record_text(self, record):
        if record[0] == ord("b"):
            return f"you bid {record[1]}"
        return ("round won", "round lost", "round drawn")[record[1]]


def _allowed(card: int, my_bid: int, out: int) -> bool:
    return round_outcome(my_bid, card) == out


@lru_cache(maxsize=1 << 18)
def _assignable(remaining: int, pending: tuple) -> bool:
    """Bipartite matching: can each pending round get a distinct remaining card?"""
    if not pending:
        return True
    cards = [c for c in range(remaining.bit_length()) if remaining >> c & 1]
    match: dict[int, int] = {}  # card -> round

    def augment(r: int, seen: set) -> bool:
        my_bid, out = pending[r]
        for c in cards:
            if c in seen or not _allowed(c, my_bid, out):
                continue
            seen.add(c)
            if c not in match or augment(match[c], seen):
                match[c] = r
                return True
        return False

    return all(augment(r, set()) for r in range(len(pending)))
