"""Extensive-form game contract shared by every game in the package.

States are immutable tuples carrying the full move history plus one
observation stream per viewer (player 1, player 2, public).  An infoset key
is the owner's stream serialised as length-prefixed records, so keys along a
path only ever grow by appending (perfect recall falls out of the layout).
"""

from __future__ import annotations

import enum
from abc import ABC, abstractmethod
from typing import NamedTuple, Sequence

import numpy as np

P1 = 0
P2 = 1
CHANCE = 2
TERMINAL = -1
PUBLIC = 2  # index of the public stream in ``state.obs``


class Player(enum.IntEnum):
    P1 = 0
    P2 = 1
    CHANCE = 2


class TargetingMode(enum.Enum):
    NONE = "none"
    PST = "pst"
    IST = "ist"

    @classmethod
    def parse(cls, value: "str | TargetingMode | None") -> "TargetingMode":
        if value is None:
            return cls.NONE
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


class GameError(ValueError):
    """Raised when an operation is used outside its precondition."""


class MatchView(NamedTuple):
    """The real in-progress match as seen by one searching player.

    ``state`` is the true state; targeting code only reads the part of it
    visible to ``player`` (their own stream and the public stream).
    """

    state: tuple
    player: int


def make_key(owner: int, records: Sequence[bytes]) -> bytes:
    parts = [bytes((owner,))]
    for rec in records:
        parts.append(bytes((len(rec),)))
        parts.append(rec)
    return b"".join(parts)


def add_obs(obs: tuple, who: Sequence[int], record: bytes) -> tuple:
    """Append ``record`` to the streams listed in ``who``."""
    streams = list(obs)
    for w in who:
        streams[w] = streams[w] + (record,)
    return tuple(streams)


EMPTY_OBS = ((), (), ())


class Game(ABC):
    """Implicit two-player zero-sum extensive-form game.

    Subclasses define states as NamedTuples with at least the fields
    ``history``, ``to_move`` (P1, P2, CHANCE or TERMINAL) and ``obs``.
    """

    game_id: str = ""
    num_actions: int = 0  # game-wide max action count (network output size)
    encoding_dim: int = 0
    targeting_modes: frozenset = frozenset({TargetingMode.NONE})
    default_targeting: TargetingMode = TargetingMode.NONE

    # -- dynamics -------------------------------------------------------

    @abstractmethod
    def initial_state(self): ...

    @abstractmethod
    def _legal(self, state) -> list[int]: ...

    @abstractmethod
    def _chance(self, state) -> list[tuple[int, float]]: ...

    @abstractmethod
    def _next(self, state, action: int): ...

    @abstractmethod
    def _returns(self, state) -> float:
        """Utility of P1 at a terminal state."""

    @abstractmethod
    def _encode(self, state, player: int) -> np.ndarray: ...

    def current_player(self, state) -> int:
        return state.to_move

    def is_terminal(self, state) -> bool:
        return state.to_move == TERMINAL

    def legal_actions(self, state) -> list[int]:
        if state.to_move == TERMINAL:
            raise GameError("legal_actions queried on a terminal state")
        return self._legal(state)

    def chance_outcomes(self, state) -> list[tuple[int, float]]:
        if state.to_move != CHANCE:
            raise GameError("chance_outcomes called on a non-chance state")
        return self._chance(state)

    def apply(self, state, action: int):
        if state.to_move == TERMINAL:
            raise GameError("cannot apply an action to a terminal state")
        if action not in self._legal(state):
            raise GameError(f"illegal action {action!r} at history {state.history}")
        return self._next(state, action)

    def utility(self, state, player: int) -> float:
        if state.to_move != TERMINAL:
            raise GameError("utility requested for a non-terminal state")
        if player not in (P1, P2):
            raise GameError("utility is defined for P1/P2 only")
        u = self._returns(state)
        return u if player == P1 else -u

    def infoset_key(self, state, player: int) -> bytes:
        if player not in (P1, P2):
            raise GameError("chance has no information sets")
        return make_key(player, state.obs[player])

    def public_key(self, state) -> bytes:
        return make_key(PUBLIC, state.obs[PUBLIC])

    def encode(self, state, player: int) -> np.ndarray:
        if player not in (P1, P2):
            raise GameError("chance has no information sets")
        return self._encode(state, player)

    def legal_mask(self, state) -> np.ndarray:
        mask = np.zeros(self.num_actions, dtype=bool)
        mask[self._legal(state)] = True
        return mask

    # -- targeting ------------------------------------------------------

    def target_consistent(self, mode, observed: MatchView, prefix, action: int) -> bool:
        """Does taking ``action`` at ``prefix`` stay inside the targeted set?

        The targeted set is every history of the same length as the real one
        that shares the searcher's stream (IST) or the public stream (PST).
        """
        mode = TargetingMode.parse(mode)
        if mode is TargetingMode.NONE:
            return True
        if mode not in self.targeting_modes:
            raise GameError(f"{self.game_id} does not support {mode.value} targeting")
        real = observed.state
        if len(prefix.history) >= len(real.history):
            return True
        child = self._next(prefix, action)
        stream = PUBLIC if mode is TargetingMode.PST else observed.player
        sim = child.obs[stream]
        target = real.obs[stream]
        if len(sim) > len(target) or target[: len(sim)] != sim:
            return False
        if len(child.history) == len(real.history):
            return sim == target
        return self._feasible(mode, observed, child)

    def _feasible(self, mode: TargetingMode, observed: MatchView, child) -> bool:
        """Whether ``child`` (already stream-compatible) can still reach the target."""
        return True

    # -- reporting ------------------------------------------------------

    def action_name(self, a: int) -> str:
        return str(a)

    def _record_text(self, record: bytes) -> str:
        return f"{chr(record[0])}{list(record[1:])}"

    def view_text(self, state, player: int) -> str:
        """What ``player`` has observed, rendered from their own stream only."""
        parts = [self._record_text(r) for r in state.obs[player]]
        return "; ".join(parts) if parts else "(nothing observed yet)"

    def describe(self) -> dict:
        return {
            "game": self.game_id,
            "encoding_dim": self.encoding_dim,
            "max_actions": self.num_actions,
            "targeting_modes": sorted(m.value for m in self.targeting_modes),
            "default_targeting": self.default_targeting.value,
        }

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.game_id}>"
