"""Kuhn poker: three cards, one betting round, ante and bet of 1.

Only used as a small fixture for solver tests.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .base import CHANCE, EMPTY_OBS, P1, P2, PUBLIC, TERMINAL, Game, MatchView, TargetingMode, add_obs

PASS, BET = 0, 1
_DECISION_HISTORIES = {(): 0, (PASS,): 1, (BET,): 2, (PASS, BET): 3}


class KuhnState(NamedTuple):
    history: tuple
    to_move: int
    obs: tuple
    cards: tuple  # dealt cards, P1 first
    bets: tuple  # betting actions so far


class KuhnPoker(Game):
    game_id = "kuhn"
    num_actions = 2
    encoding_dim = 3 + 4
    targeting_modes = frozenset({TargetingMode.NONE, TargetingMode.PST, TargetingMode.IST})
    default_targeting = TargetingMode.PST

    def initial_state(self):
        return KuhnState((), CHANCE, EMPTY_OBS, (), ())

    def _legal(self, s):
        if s.to_move == CHANCE:
            return [c for c in range(3) if c not in s.cards]
        return [PASS, BET]

    def _chance(self, s):
        left = [c for c in range(3) if c not in s.cards]
        return [(c, 1.0 / len(left)) for c in left]

    def _next(self, s, a):
        history = s.history + (a,)
        if s.to_move == CHANCE:
            cards = s.cards + (a,)
            seat = len(s.cards)
            obs = add_obs(s.obs, (seat,), bytes((ord("c"), a)))
            return KuhnState(history, P1 if len(cards) == 2 else CHANCE, obs, cards, ())
        bets = s.bets + (a,)
        obs = add_obs(s.obs, (P1, P2, PUBLIC), bytes((ord("a"), a)))
        done = bets in ((PASS, PASS), (BET, PASS), (BET, BET), (PASS, BET, PASS), (PASS, BET, BET))
        to_move = TERMINAL if done else 1 - s.to_move
        return KuhnState(history, to_move, obs, s.cards, bets)

    def _returns(self, s):
        bets = s.bets
        if bets == (BET, PASS):
            return 1.0
        if bets == (PASS, BET, PASS):
            return -1.0
        stake = 1.0 if bets == (PASS, PASS) else 2.0
        return stake if s.cards[0] > s.cards[1] else -stake

    def _encode(self, s, player):
        x = np.zeros(self.encoding_dim, dtype=np.float32)
        if len(s.cards) > player:
            x[s.cards[player]] = 1.0
        idx = _DECISION_HISTORIES.get(s.bets)
        if idx is not None:
            x[3 + idx] = 1.0
        return x

    def _feasible(self, mode, observed: MatchView, child):
        if mode is not TargetingMode.IST:
            return True
        # the searcher's own card must still be in the deck
        me = observed.player
        if len(child.cards) > me:
            return True
        return observed.state.cards[me] not in child.cards

    def action_name(self, a: int) -> str:
        return ("pass", "bet")[a]

    def _record_text(self, record):
        if record[0] == ord("c"):
            return f"your card {'JQK'[record[1]]}"
        return self.action_name(record[1])
