"""Game registry and shared game types."""

from __future__ import annotations

import json

from .base import (
    CHANCE,
    P1,
    P2,
    PUBLIC,
    TERMINAL,
    Game,
    GameError,
    MatchView,
    Player,
    TargetingMode,
)
from .goofspiel import Goofspiel
from .kuhn import KuhnPoker
from .leduc import LeducPoker
from .liars_dice import LiarsDice

GAME_IDS = ("leduc", "goof6", "goof13", "goofN:<N>", "liars1", "liars2", "kuhn")

_FIXED = {
    "leduc": LeducPoker,
    "kuhn": KuhnPoker,
    "goof6": lambda: Goofspiel(6),
    "goof13": lambda: Goofspiel(13),
    "liars1": lambda: LiarsDice(1),
    "liars2": lambda: LiarsDice(2),
}


def load_game(game_id: str) -> Game:
    """Build a game from its registry id (``leduc``, ``goofN:5``, ...)."""
    gid = game_id.strip().lower()
    if gid in _FIXED:
        return _FIXED[gid]()
    for prefix, cls in (("goofn:", Goofspiel), ("goof", Goofspiel), ("liars", LiarsDice)):
        if gid.startswith(prefix) and gid[len(prefix):].isdigit():
            n = int(gid[len(prefix):])
            if n >= 1:
                return cls(n)
    raise GameError(f"unknown game id {game_id!r}; known: {', '.join(GAME_IDS)}")


def describe(game_id: str, as_json: bool = False) -> "dict | str":
    info = load_game(game_id).describe()
    if as_json:
        return json.dumps(info, sort_keys=True)
    return info


__all__ = [
    "CHANCE",
    "GAME_IDS",
    "Game",
    "GameError",
    "Goofspiel",
    "KuhnPoker",
    "LeducPoker",
    "LiarsDice",
    "MatchView",
    "P1",
    "P2",
    "PUBLIC",
    "Player",
    "TERMINAL",
    "TargetingMode",
    "describe",
    "load_game",
]
