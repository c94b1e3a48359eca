"""Liar's Dice with N six-sided dice per player; sixes are wild.

Each player's roll is a single chance node over sorted dice multisets.
Bid ``(q, f)`` has action id ``(q - 1) * 6 + (f - 1)``, so a bid is legal
exactly when its id exceeds the previous bid's.  Calling liar is the last id.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from typing import NamedTuple

import numpy as np

from .base import CHANCE, EMPTY_OBS, P1, P2, PUBLIC, TERMINAL, Game, MatchView, TargetingMode, add_obs

WILD = 6


def bid_of(action: int) -> tuple[int, int]:
    return action // 6 + 1, action % 6 + 1


def bid_action(quantity: int, face: int) -> int:
    return (quantity - 1) * 6 + (face - 1)


def bid_holds(quantity: int, face: int, dice) -> bool:
    if face == WILD:
        count = sum(1 for d in dice if d == WILD)
    else:
        count = sum(1 for d in dice if d == face or d == WILD)
    return count >= quantity


class LiarsState(NamedTuple):
    history: tuple
    to_move: int
    obs: tuple
    dice: tuple  # sorted roll per player, as rolled so far
    bids: tuple  # bid action ids in order
    called_by: int  # player who called liar, or -1


class LiarsDice(Game):
    targeting_modes = frozenset({TargetingMode.NONE, TargetingMode.PST, TargetingMode.IST})
    default_targeting = TargetingMode.PST

    def __init__(self, n: int = 1):
        if n < 1:
            raise ValueError("Liar's Dice needs at least one die per player")
        self.n = n
        self.game_id = f"liars{n}"
        self.num_bids = 12 * n
        self.liar = self.num_bids
        self.num_actions = self.num_bids + 1
        self.encoding_dim = 6 + self.num_bids + 1
        rolls = list(itertools.combinations_with_replacement(range(1, 7), n))
        self.rolls = rolls
        self.roll_probs = []
        for roll in rolls:
            perms = math.factorial(n)
            for c in Counter(roll).values():
                perms //= math.factorial(c)
            self.roll_probs.append(perms / 6.0**n)

    def initial_state(self):
        return LiarsState((), CHANCE, EMPTY_OBS, (), (), -1)

    def _legal(self, s):
        if s.to_move == CHANCE:
            return list(range(len(self.rolls)))
        start = s.bids[-1] + 1 if s.bids else 0
        acts = list(range(start, self.num_bids))
        if s.bids:
            acts.append(self.liar)
        return acts

    def _chance(self, s):
        return list(enumerate(self.roll_probs))

    def _next(self, s, a):
        history = s.history + (a,)
        if s.to_move == CHANCE:
            seat = len(s.dice)
            dice = s.dice + (self.rolls[a],)
            obs = add_obs(s.obs, (seat,), bytes((ord("d"),) + self.rolls[a]))
            to_move = P1 if len(dice) == 2 else CHANCE
            return LiarsState(history, to_move, obs, dice, (), -1)
        me = s.to_move
        obs = add_obs(s.obs, (P1, P2, PUBLIC), bytes((ord("a"), a)))
        if a == self.liar:
            return LiarsState(history, TERMINAL, obs, s.dice, s.bids, me)
        return LiarsState(history, 1 - me, obs, s.dice, s.bids + (a,), -1)

    def _returns(self, s):
        q, f = bid_of(s.bids[-1])
        holds = bid_holds(q, f, s.dice[0] + s.dice[1])
        caller_wins = not holds
        u_caller = 1.0 if caller_wins else -1.0
        return u_caller if s.called_by == P1 else -u_caller

    def _encode(self, s, player):
        x = np.zeros(self.encoding_dim, dtype=np.float32)
        if len(s.dice) > player:
            for d in s.dice[player]:
                x[d - 1] += 1.0
        for b in s.bids:
            x[6 + b] = 1.0
        if s.to_move == player:
            x[-1] = 1.0
        return x

    def _feasible(self, mode, observed: MatchView, child):
        return True

    def action_name(self, a: int) -> str:
        if a == self.liar:
            return "liar"
        q, f = bid_of(a)
        return f"{q}x{f}"

    def _record_text(self, record):
        if record[0] == ord("d"):
            return "your dice " + " ".join(str(f) for f in record[1:])
        return self.action_name(record[1])
