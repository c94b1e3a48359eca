"""The Expert Iteration loop: self-play, reservoir, gradient steps, snapshot."""

from __future__ import annotations

import dataclasses
import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..apprentice import checkpoint
from ..apprentice.net import AdamState, NetConfig, adam_step, init, loss_and_grad
from ..games import load_game
from ..games.base import CHANCE, TERMINAL
from ..oos.core import SearchConfig, sample_index
from .reservoir import GAMES_CAPACITY, Reservoir, replace_probability
from .selfplay import Expert, play_games

log = logging.getLogger(__name__)

PROBE_GAMES = ("leduc", "kuhn")


@dataclass
class TrainLoopConfig:
    games_per_iteration: int = 32
    steps_per_iteration: int | None = None  # None -> 512 on Goofspiel(13), else 128
    concurrent_searches: int = 20
    minibatch: int = 128
    checkpoint_every: int = 10
    probe_every: int | None = None  # None -> 10 on Leduc/Kuhn, else off
    seed: int = 0
    workers: int = 1
    learning_rate: float = 1e-3
    reservoir_games: int = GAMES_CAPACITY
    p_replace: float = replace_probability()
    capacity_probe_games: int = 500
    engine: str = "auto"

    def __post_init__(self):
        for name in ("games_per_iteration", "concurrent_searches", "minibatch", "workers",
                     "reservoir_games", "capacity_probe_games"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.checkpoint_every < 0:
            raise ValueError("checkpoint_every must be non-negative")

    def resolved(self, game) -> "TrainLoopConfig":
        steps = self.steps_per_iteration
        if steps is None:
            steps = 512 if game.game_id == "goof13" else 128
        probe = self.probe_every
        if probe is None:
            probe = 10 if game.game_id in PROBE_GAMES else 0
        return dataclasses.replace(self, steps_per_iteration=steps, probe_every=probe)


@dataclass
class TrainerState:
    game: object
    search: SearchConfig
    loop: TrainLoopConfig
    params: object
    adam: AdamState
    reservoir: Reservoir
    rng: np.random.Generator
    iteration: int = 0
    games: int = 0
    steps: int = 0
    metrics: list = dataclasses.field(default_factory=list)


def mean_decisions(game, rng, n_games: int) -> float:
    """Average number of player decisions per game under uniform random play."""
    total = 0
    for _ in range(n_games):
        s = game.initial_state()
        while s.to_move != TERMINAL:
            if s.to_move == CHANCE:
                outs = game._chance(s)
                a = outs[sample_index([p for _, p in outs], rng.random())][0]
            else:
                legal = game._legal(s)
                a = legal[int(rng.integers(len(legal)))]
                total += 1
            s = game._next(s, a)
    return total / n_games


def new_trainer(game, search: SearchConfig | None = None, loop: TrainLoopConfig | None = None,
                net_config: NetConfig | None = None) -> TrainerState:
    search = search or SearchConfig()
    loop = (loop or TrainLoopConfig()).resolved(game)
    params = init(net_config or NetConfig.for_game(game), np.random.default_rng([loop.seed, 0, 0, 0]))
    per_game = mean_decisions(game, np.random.default_rng([loop.seed, 0, 0, 2]), loop.capacity_probe_games)
    capacity = max(1, int(round(loop.reservoir_games * per_game)))
    log.info("%s: %.2f decisions per game, reservoir capacity %d", game.game_id, per_game, capacity)
    res = Reservoir(capacity, game.encoding_dim, game.num_actions, loop.p_replace)
    adam = AdamState.zeros_like(params, lr=loop.learning_rate)
    return TrainerState(game, search, loop, params, adam, res, np.random.default_rng([loop.seed, 0, 0, 1]))


def _game_rngs(seed: int, iteration: int, indices) -> list:
    return [np.random.default_rng([seed, 1, iteration, i]) for i in indices]


def _worker_games(args):
    game_id, search, params, engine, seed, iteration, indices, concurrent = args
    expert = Expert(load_game(game_id), search, params, engine)
    return play_games(expert, _game_rngs(seed, iteration, indices), concurrent)


def collect_games(state: TrainerState, iteration: int) -> list:
    """Experience lists of this iteration's games, in game order."""
    loop = state.loop
    n = loop.games_per_iteration
    if loop.workers == 1:
        expert = Expert(state.game, state.search, state.params, loop.engine)
        return play_games(expert, _game_rngs(loop.seed, iteration, range(n)), loop.concurrent_searches)
    import multiprocessing as mp

    chunks = [list(range(n))[w :: loop.workers] for w in range(loop.workers)]
    jobs = [(state.game.game_id, state.search, state.params, loop.engine, loop.seed, iteration, c,
             loop.concurrent_searches) for c in chunks if c]
    with mp.get_context("fork").Pool(len(jobs)) as pool:
        parts = pool.map(_worker_games, jobs)
    out = [None] * n
    for c, res in zip(chunks, parts):
        for i, r in zip(c, res):
            out[i] = r
    return out


def probe(state: TrainerState) -> float:
    from ..evaluation.best_response import exploitability
    from ..evaluation.profiles import NetProfile

    return exploitability(state.game, NetProfile(state.params))


def training_iteration(state: TrainerState) -> TrainerState:
    loop = state.loop
    it = state.iteration + 1
    games = collect_games(state, it)
    for tuples in games:
        state.reservoir.insert(tuples, state.rng)
    state.games += len(games)
    if len(state.reservoir) == 0:
        raise RuntimeError("reservoir is empty; nothing to train on")

    params, adam = state.params, state.adam
    losses = np.empty(loop.steps_per_iteration)
    for k in range(loop.steps_per_iteration):
        feats, masks, targets = state.reservoir.sample(loop.minibatch, state.rng)
        losses[k], grads = loss_and_grad(params, feats, masks, targets)
        params, adam = adam_step(params, adam, grads)
    params.version = state.params.version + 1
    state.params, state.adam = params, adam
    state.steps += loop.steps_per_iteration
    state.iteration = it

    record = {"iter": it, "games": state.games, "steps": state.steps,
              "mean_loss": float(losses.mean()), "reservoir_size": len(state.reservoir)}
    if loop.probe_every and it % loop.probe_every == 0:
        record["exploitability"] = probe(state)
    state.metrics.append(record)
    return state


def write_config(path: Path, game_id: str, search: SearchConfig, loop: TrainLoopConfig, extra: dict | None = None):
    lines = [f"game={game_id}"]
    for prefix, cfg in (("search", search), ("loop", loop)):
        for f in dataclasses.fields(cfg):
            v = getattr(cfg, f.name)
            v = v.value if hasattr(v, "value") else v
            lines.append(f"{prefix}.{f.name}={'' if v is None else v}")
    for k, v in (extra or {}).items():
        lines.append(f"{k}={v}")
    path.write_text("\n".join(lines) + "\n")


def run_training(game_id: str, total_iterations: int, out_dir, search: SearchConfig | None = None,
                 loop: TrainLoopConfig | None = None, net_config: NetConfig | None = None,
                 progress=None) -> TrainerState:
    """Train for ``total_iterations`` and write checkpoints, metrics and the config echo."""
    if total_iterations < 0:
        raise ValueError("total_iterations must be non-negative")
    game = load_game(game_id)
    out = Path(out_dir)
    try:
        (out / "checkpoints").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    state = new_trainer(game, search, loop, net_config)
    write_config(out / "config.txt", game.game_id, state.search, state.loop,
                 {"iterations": total_iterations, "reservoir_capacity": state.reservoir.capacity})
    metrics_path = out / "metrics.jsonl"
    metrics_path.write_text("")

    def save(tag):
        p = out / "checkpoints" / f"{tag}.bin"
        checkpoint.save(p, state.params, game.game_id, state.adam, {"iteration": state.iteration})
        checkpoint.save(out / "latest.bin", state.params, game.game_id, state.adam,
                        {"iteration": state.iteration})

    save("iter-00000")
    every = state.loop.checkpoint_every
    for _ in range(total_iterations):
        t0 = time.perf_counter()
        training_iteration(state)
        rec = state.metrics[-1]
        with open(metrics_path, "a") as fh:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
        if (every and state.iteration % every == 0) or state.iteration == total_iterations:
            save(f"iter-{state.iteration:05d}")
        log.info("iter %d loss %.4f (%.1fs)%s", state.iteration, rec["mean_loss"], time.perf_counter() - t0,
                 f" exploitability {rec['exploitability']:.4f}" if "exploitability" in rec else "")
        if progress is not None:
            progress(rec)
    return state
