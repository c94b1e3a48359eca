"""Agents and the head-to-head match harness.

Games are played in seat-swapped pairs: games ``2k`` and ``2k + 1`` share the
chance stream keyed by ``(seed, k)``, agent A sits first in the even game, and
each seat's agent stream is keyed by ``(seed, k, seat)``.  Swapping A and B
therefore replays the same games with the seats exchanged.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..games.base import CHANCE, P1, TERMINAL, GameError, MatchView
from ..games.tree import flat_tree, has_flat_tree
from ..oos.core import SearchConfig, SearchTree, sample_index
from ..oos.search import NetPlayout, UniformPlayout, run_search


class Agent:
    name = "agent"

    def reset(self, game, seat: int, rng):
        self.game, self.seat, self.rng = game, seat, rng

    def observe(self, event):
        """Hook for agents that track the match; the default ignores events."""

    def policy(self, view: MatchView) -> np.ndarray:
        """Distribution over the legal actions at ``view`` (legal order)."""
        raise NotImplementedError

    def act(self, view: MatchView) -> int:
        legal = self.game._legal(view.state)
        return legal[sample_index(self.policy(view), self.rng.random())]


class RandomAgent(Agent):
    name = "random"

    def policy(self, view):
        n = len(self.game._legal(view.state))
        return np.full(n, 1.0 / n)


class NetAgent(Agent):
    def __init__(self, params, greedy: bool = False, label: str = "net"):
        self.params = params
        self.greedy = greedy
        self.name = label

    def reset(self, game, seat, rng):
        if game.encoding_dim != self.params.config.input_dim or game.num_actions != self.params.config.output_dim:
            raise GameError(
                f"network expects input {self.params.config.input_dim} / output {self.params.config.output_dim}, "
                f"{game.game_id} has {game.encoding_dim} / {game.num_actions}"
            )
        super().reset(game, seat, rng)

    def policy(self, view):
        from ..apprentice.net import forward

        s, p = view.state, view.player
        full = forward(self.params, self.game.encode(s, p), self.game.legal_mask(s))
        return full[self.game._legal(s)]

    def act(self, view):
        if not self.greedy:
            return super().act(view)
        legal = self.game._legal(view.state)
        return legal[int(np.argmax(self.policy(view)))]


class OOSAgent(Agent):
    """OOS searcher; the search tree lives for one game and is reset at the next."""

    def __init__(self, cfg: SearchConfig, params=None, engine: str = "auto", label: str = "oos"):
        self.cfg = cfg
        self.params = params
        self.engine = engine
        self.name = label
        self._fast = None
        self._fast_game = None

    def reset(self, game, seat, rng):
        if self.params is not None:
            NetAgent(self.params).reset(game, seat, rng)
        super().reset(game, seat, rng)
        use_fast = self.engine == "fast" or (self.engine == "auto" and has_flat_tree(game))
        if use_fast:
            if self._fast is None or self._fast_game != game.game_id:
                from ..oos.fast import FastSearch

                playout = NetPlayout(self.params) if self.params is not None else None
                self._fast = FastSearch(game, flat_tree(game), self.cfg, playout)
                self._fast_game = game.game_id
            self._fast.reset()
        else:
            self._fast = None
            self.tree = SearchTree()
            self.playout = NetPlayout(self.params) if self.params is not None else UniformPlayout()

    def policy(self, view):
        if self._fast is not None:
            return self._fast.run(view, self.rng)
        return run_search(self.tree, self.game, view, self.cfg, self.playout, self.rng)


AGENT_KINDS = ("random", "net", "greedy", "oos")


def parse_agent(spec: str, game=None) -> Agent:
    """Build an agent from ``kind[:arg][+playout]``.

    ``random``; ``net:CKPT`` (samples) or ``greedy:CKPT``; ``oos:SIMS`` with
    uniform playouts or ``oos:SIMS+net:CKPT`` with network playouts.
    """
    from ..apprentice import checkpoint

    def load(path):
        params, _, _ = checkpoint.load(path)
        return params

    spec = spec.strip()
    base, _, playout = spec.partition("+")
    kind, _, arg = base.partition(":")
    kind = kind.lower()
    if kind == "random" and not arg and not playout:
        return RandomAgent()
    if kind in ("net", "greedy") and arg and not playout:
        return NetAgent(load(arg), greedy=kind == "greedy", label=spec)
    if kind == "oos" and arg:
        try:
            sims = int(arg)
        except ValueError:
            raise ValueError(f"bad simulation count in agent spec {spec!r}") from None
        if sims < 0:
            raise ValueError(f"bad simulation count in agent spec {spec!r}")
        params = None
        if playout:
            pk, _, ppath = playout.partition(":")
            if pk.lower() != "net" or not ppath:
                raise ValueError(f"bad playout in agent spec {spec!r}; expected +net:CKPT")
            params = load(ppath)
        return OOSAgent(SearchConfig(simulations=sims), params, label=spec)
    raise ValueError(f"cannot parse agent spec {spec!r}")


def make_agent(kind: str, **kw) -> Agent:
    if kind == "random":
        return RandomAgent()
    if kind in ("net", "greedy"):
        return NetAgent(kw["params"], greedy=kind == "greedy" or kw.get("greedy", False))
    if kind == "oos":
        return OOSAgent(kw.get("cfg") or SearchConfig(), kw.get("params"), kw.get("engine", "auto"))
    raise ValueError(f"unknown agent kind {kind!r}; choose from {', '.join(AGENT_KINDS)}")


@dataclass
class MatchResult:
    agent_a: str
    agent_b: str
    game: str
    games: int = 0
    wins: int = 0
    draws: int = 0
    losses: int = 0
    a_first_games: int = 0
    a_first_score: float = 0.0
    a_second_score: float = 0.0
    outcomes: list = field(default_factory=list, repr=False)  # A's utility per game

    @property
    def score(self) -> float:
        return self.wins + 0.5 * self.draws

    @property
    def win_rate(self) -> float:
        return self.score / self.games if self.games else float("nan")

    @property
    def win_rate_percent(self) -> float:
        return 100.0 * self.win_rate

    @property
    def stderr_percent(self) -> float:
        p = self.win_rate
        return 100.0 * math.sqrt(p * (1.0 - p) / self.games)

    def row(self) -> dict:
        return {"game": self.game, "agent_a": self.agent_a, "agent_b": self.agent_b, "games": self.games,
                "wins": self.wins, "draws": self.draws, "losses": self.losses,
                "win_rate_percent": f"{self.win_rate_percent:.2f}", "stderr_percent": f"{self.stderr_percent:.2f}",
                "mean_utility_a": f"{float(np.mean(self.outcomes)) if self.outcomes else 0.0:.4f}"}

    def pretty(self) -> str:
        return (f"{self.agent_a} vs {self.agent_b} on {self.game}: {self.win_rate_percent:.1f}% "
                f"({self.stderr_percent:.1f})  W/D/L {self.wins}/{self.draws}/{self.losses} over {self.games}")


CSV_FIELDS = ("game", "agent_a", "agent_b", "games", "wins", "draws", "losses", "win_rate_percent",
              "stderr_percent", "mean_utility_a")


def write_csv(path, results) -> None:
    path = Path(path)
    new = not path.exists() or path.stat().st_size == 0
    with open(path, "a", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        if new:
            w.writeheader()
        for r in results:
            w.writerow(r.row())


def play_game(game, agents, chance_rng) -> float:
    """One game with ``agents[seat]`` in each seat; returns P1's utility."""
    s = game.initial_state()
    while s.to_move != TERMINAL:
        p = s.to_move
        if p == CHANCE:
            outs = game._chance(s)
            a = outs[sample_index([pr for _, pr in outs], chance_rng.random())][0]
        else:
            a = agents[p].act(MatchView(s, p))
            if a not in game._legal(s):
                raise GameError(f"agent {agents[p].name} chose illegal action {a}")
        for ag in agents:
            ag.observe((p, a))
        s = game._next(s, a)
    return game._returns(s)


def _play_pairs(agent_a, agent_b, game, seed, game_ids):
    out = []
    for g in game_ids:
        k, swap = divmod(g, 2)
        seats = [agent_b, agent_a] if swap else [agent_a, agent_b]
        for seat, ag in enumerate(seats):
            ag.reset(game, seat, np.random.default_rng([seed, k, seat, 1]))
        u1 = play_game(game, seats, np.random.default_rng([seed, k, 0, 0]))
        out.append((g, -u1 if swap else u1))
    return out


def _pool_job(args):
    agent_a, agent_b, game, seed, ids = args
    return _play_pairs(agent_a, agent_b, game, seed, ids)


def play_match(agent_a: Agent, agent_b: Agent, game, n_games: int, seed: int = 0,
               workers: int = 1) -> MatchResult:
    if n_games < 1:
        raise ValueError("n_games must be at least 1")
    ids = list(range(n_games))
    if workers <= 1:
        played = _play_pairs(agent_a, agent_b, game, seed, ids)
    else:
        import multiprocessing as mp

        chunks = [ids[w::workers] for w in range(workers)]
        jobs = [(agent_a, agent_b, game, seed, c) for c in chunks if c]
        with mp.get_context("fork").Pool(len(jobs)) as pool:
            played = sorted(sum(pool.map(_pool_job, jobs), []))
    res = MatchResult(getattr(agent_a, "name", "A"), getattr(agent_b, "name", "B"), game.game_id)
    for g, ua in played:
        res.games += 1
        res.outcomes.append(ua)
        score = 1.0 if ua > 0 else 0.5 if ua == 0 else 0.0
        if ua > 0:
            res.wins += 1
        elif ua == 0:
            res.draws += 1
        else:
            res.losses += 1
        if g % 2 == 0:
            res.a_first_games += 1
            res.a_first_score += score
        else:
            res.a_second_score += score
    return res
