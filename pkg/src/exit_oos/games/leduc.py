"""Leduc hold'em.

Six cards (J, Q, K in two suits), one private card each, one community card
between two betting rounds.  Ante 1, fixed raise 2 then 4, at most two
raises per round.  Chance deals distinct cards; information sets only see
ranks, which gives the usual 288 infosets.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .base import CHANCE, EMPTY_OBS, P1, P2, PUBLIC, TERMINAL, Game, MatchView, TargetingMode, add_obs

FOLD, CALL, RAISE = 0, 1, 2
ACTION_NAMES = ("fold", "call", "raise")
RANKS = "JQK"
RAISE_SIZE = (2, 4)
MAX_RAISES = 2

# non-empty in-progress betting patterns of a round; a finished round is one
# of these followed by a call
_PATTERNS = {(CALL,): 0, (RAISE,): 1, (CALL, RAISE): 2, (RAISE, RAISE): 3, (CALL, RAISE, RAISE): 4}


def rank(card: int) -> int:
    return card // 2


def card_name(card: int) -> str:
    return RANKS[rank(card)] + "sh"[card % 2]


class LeducState(NamedTuple):
    history: tuple
    to_move: int
    obs: tuple
    cards: tuple  # (p1 hole, p2 hole, community) as dealt so far
    rounds: tuple  # betting sequence per round, e.g. ((1, 2, 1), (2,))
    contrib: tuple  # chips committed by each player
    folded: int  # player who folded, or -1


class LeducPoker(Game):
    game_id = "leduc"
    num_actions = 3
    encoding_dim = 6 + 7 + 2 * 5
    targeting_modes = frozenset({TargetingMode.NONE, TargetingMode.PST, TargetingMode.IST})
    default_targeting = TargetingMode.PST

    def initial_state(self):
        return LeducState((), CHANCE, EMPTY_OBS, (), ((),), (1, 1), -1)

    def _deck(self, s):
        return [c for c in range(6) if c not in s.cards]

    def _legal(self, s):
        if s.to_move == CHANCE:
            return self._deck(s)
        seq = s.rounds[-1]
        raises = seq.count(RAISE)
        facing = s.contrib[0] != s.contrib[1]
        acts = [FOLD, CALL] if facing else [CALL]
        if raises < MAX_RAISES:
            acts.append(RAISE)
        return acts

    def _chance(self, s):
        deck = self._deck(s)
        p = 1.0 / len(deck)
        return [(c, p) for c in deck]

    def _next(self, s, a):
        history = s.history + (a,)
        if s.to_move == CHANCE:
            cards = s.cards + (a,)
            n = len(cards)
            if n <= 2:
                obs = add_obs(s.obs, (n - 1,), bytes((ord("c"), rank(a))))
                return LeducState(history, P1 if n == 2 else CHANCE, obs, cards, s.rounds, s.contrib, -1)
            obs = add_obs(s.obs, (P1, P2, PUBLIC), bytes((ord("b"), rank(a))))
            return LeducState(history, P1, obs, cards, s.rounds + ((),), s.contrib, -1)

        me = s.to_move
        obs = add_obs(s.obs, (P1, P2, PUBLIC), bytes((ord("a"), a)))
        seq = s.rounds[-1] + (a,)
        rounds = s.rounds[:-1] + (seq,)
        contrib = list(s.contrib)
        if a == FOLD:
            return LeducState(history, TERMINAL, obs, s.cards, rounds, s.contrib, me)
        if a == RAISE:
            contrib[me] = max(contrib) + RAISE_SIZE[len(s.rounds) - 1]
            return LeducState(history, 1 - me, obs, s.cards, rounds, tuple(contrib), -1)
        contrib[me] = max(contrib)
        contrib = tuple(contrib)
        # a call closes the round unless it is the opening check
        if seq == (CALL,):
            return LeducState(history, 1 - me, obs, s.cards, rounds, contrib, -1)
        if len(s.rounds) == 2:
            return LeducState(history, TERMINAL, obs, s.cards, rounds, contrib, -1)
        return LeducState(history, CHANCE, obs, s.cards, rounds, contrib, -1)

    def _returns(self, s):
        if s.folded >= 0:
            loss = float(s.contrib[s.folded])
            return -loss if s.folded == P1 else loss
        board = rank(s.cards[2])
        r1, r2 = rank(s.cards[0]), rank(s.cards[1])
        s1 = (1, r1) if r1 == board else (0, r1)
        s2 = (1, r2) if r2 == board else (0, r2)
        if s1 == s2:
            return 0.0
        pot = float(s.contrib[1]) if s1 > s2 else -float(s.contrib[0])
        return pot

    def _encode(self, s, player):
        x = np.zeros(self.encoding_dim, dtype=np.float32)
        # cards enter through their rank only (slot of the first suit), so the
        # vector is a function of the infoset key
        if len(s.cards) > player:
            x[2 * rank(s.cards[player])] = 1.0
        x[6 + (2 * rank(s.cards[2]) if len(s.cards) == 3 else 6)] = 1.0
        for i, seq in enumerate(s.rounds):
            body = seq[:-1] if i < len(s.rounds) - 1 and seq else seq
            idx = _PATTERNS.get(body)
            if idx is not None:
                x[13 + 5 * i + idx] = 1.0
        return x

    def _feasible(self, mode, observed: MatchView, child):
        # ranks the target still needs from the deck: the community card
        # (public) and, under IST, the searcher's own hole card
        real = observed.state
        need = []
        if len(real.cards) == 3 and len(child.cards) < 3:
            need.append(rank(real.cards[2]))
        me = observed.player
        if mode is TargetingMode.IST and len(child.cards) <= me:
            need.append(rank(real.cards[me]))
        if not need:
            return True
        deck = [rank(c) for c in self._deck(child)]
        # hole cards still to deal to the other seat can take anything else
        for r in need:
            if r not in deck:
                return False
            deck.remove(r)
        return True

    def action_name(self, a: int) -> str:
        return ACTION_NAMES[a]

    def _record_text(self, record):
        tag, v = chr(record[0]), record[1]
        if tag == "c":
            return f"your card {RANKS[v]}"
        if tag == "b":
            return f"board {RANKS[v]}"
        return self.action_name(v)
