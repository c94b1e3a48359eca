"""Self-play with an OOS expert on both seats.

Each game is a generator-based state machine.  On games with a flat tree the
compiled engine runs searches directly (its playouts read a policy table
computed once per snapshot); otherwise the reference engine yields a
:class:`PlayoutRequest` whenever a playout needs the network, and
:func:`play_games` interleaves many machines, evaluating their requests in one
batch per flush.  Every game owns its random stream, so the interleaving never
changes a result.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ..games.base import CHANCE, TERMINAL, MatchView
from ..games.tree import flat_tree, has_flat_tree
from ..oos.core import SearchConfig, SearchTree, sample_index
from ..oos.fast import FastSearch, policy_table
from ..oos.search import NetPlayout, PlayoutRequest, search_episodes


class ExperienceTuple(NamedTuple):
    features: np.ndarray
    mask: np.ndarray
    target: np.ndarray


class EvalRequestQueue:
    """Pending network evaluations, each tagged with the machine that asked."""

    def __init__(self):
        self.pending: list = []
        self.batch_sizes: list = []

    def __len__(self) -> int:
        return len(self.pending)

    def submit(self, ticket, request: PlayoutRequest):
        self.pending.append((ticket, request.features, request.mask))


def flush_eval_batch(queue: EvalRequestQueue, params) -> list:
    """Evaluate every pending request in one forward pass.

    Returns ``(ticket, probs)`` pairs in submission order and empties the queue.
    """
    if not queue.pending:
        return []
    from ..apprentice.net import forward

    tickets = [t for t, _, _ in queue.pending]
    feats = np.stack([f for _, f, _ in queue.pending])
    masks = np.stack([m for _, _, m in queue.pending])
    probs = forward(params, feats, masks)
    queue.batch_sizes.append(len(tickets))
    queue.pending = []
    return list(zip(tickets, probs))


class Expert:
    """Builds per-game searchers bound to one parameter snapshot."""

    def __init__(self, game, cfg: SearchConfig, params, engine: str = "auto"):
        if engine not in ("auto", "fast", "python"):
            raise ValueError(f"unknown engine {engine!r}")
        self.game = game
        self.cfg = cfg
        self.params = params
        use_fast = engine == "fast" or (engine == "auto" and has_flat_tree(game))
        self.flat = flat_tree(game) if use_fast else None
        self.table = policy_table(self.flat, params) if use_fast else None

    @property
    def fast(self) -> bool:
        return self.flat is not None


def game_machine(expert: Expert, rng):
    """One self-play game; yields playout requests, returns the experience list."""
    game, cfg = expert.game, expert.cfg
    if expert.fast:
        search = FastSearch(game, expert.flat, cfg)
        search.set_table(expert.table)
    else:
        tree = SearchTree()
        playout = NetPlayout(expert.params)
    out = []
    s = game.initial_state()
    while s.to_move != TERMINAL:
        p = s.to_move
        if p == CHANCE:
            outs = game._chance(s)
            k = sample_index([pr for _, pr in outs], rng.random())
            s = game._next(s, outs[k][0])
            continue
        view = MatchView(s, p)
        if expert.fast:
            dist = search.run(view, rng)
        else:
            dist = yield from search_episodes(tree, game, view, cfg, playout, rng)
        legal = game._legal(s)
        target = np.zeros(game.num_actions)
        target[legal] = dist
        out.append(ExperienceTuple(game.encode(s, p), game.legal_mask(s), target))
        s = game._next(s, legal[sample_index(dist, rng.random())])
    return out


def self_play_game(game, cfg: SearchConfig, params, rng, engine: str = "auto", expert=None) -> list:
    """Play one game with unbatched evaluation."""
    expert = expert or Expert(game, cfg, params, engine)
    gen = game_machine(expert, rng)
    playout = NetPlayout(params)
    try:
        req = next(gen)
        while True:
            req = gen.send(playout(req.features, req.mask))
    except StopIteration as stop:
        return stop.value


def game_rng(seed: int, iteration: int, index: int):
    return np.random.default_rng([seed, iteration, index])


def play_games(expert: Expert, rngs: list, concurrent: int = 20, queue: EvalRequestQueue | None = None) -> list:
    """Run one game per rng with up to ``concurrent`` machines interleaved.

    Returns each game's experience list in rng order.
    """
    queue = queue if queue is not None else EvalRequestQueue()
    results = [None] * len(rngs)
    waiting = iter(range(len(rngs)))
    live = {}  # ticket -> generator

    def advance(ticket, gen, value):
        try:
            req = gen.send(value)
        except StopIteration as stop:
            results[ticket] = stop.value
            return False
        queue.submit(ticket, req)
        return True

    def start_next():
        for ticket in waiting:
            gen = game_machine(expert, rngs[ticket])
            if advance(ticket, gen, None):
                live[ticket] = gen
                return

    for _ in range(concurrent):
        start_next()
    while live:
        for ticket, probs in flush_eval_batch(queue, expert.params):
            if not advance(ticket, live[ticket], probs):
                del live[ticket]
                start_next()
    return results
