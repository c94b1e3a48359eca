"""Command-line entry point: ``exit-oos <command> ...``.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
Environment: ``EXIT_OOS_OUT`` sets the default output directory and
``EXIT_OOS_WORKERS`` the default worker count.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import itertools
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .games import GAME_IDS, GameError, load_game
from .games.base import TERMINAL, MatchView
from .oos.core import SearchConfig, sample_index
from .training.loop import TrainLoopConfig

log = logging.getLogger("exit_oos")


class UsageError(Exception):
    pass


def _env_workers() -> int:
    raw = os.environ.get("EXIT_OOS_WORKERS")
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"EXIT_OOS_WORKERS must be an integer, got {raw!r}") from None
    if n < 1:
        raise UsageError("EXIT_OOS_WORKERS must be at least 1")
    return n


def _out_dir(arg, default_name: str) -> Path:
    if arg:
        return Path(arg)
    return Path(os.environ.get("EXIT_OOS_OUT", "runs")) / default_name


def _game(gid: str):
    try:
        return load_game(gid)
    except GameError as exc:
        raise UsageError(str(exc)) from None


# -- train ---------------------------------------------------------------

# flag -> (config section, field)
_TRAIN_FLAGS = {
    "sims": ("search", "simulations"),
    "epsilon": ("search", "epsilon"),
    "delta": ("search", "delta"),
    "gamma": ("search", "gamma"),
    "beta_ema": ("search", "beta_ema"),
    "targeting": ("search", "targeting"),
    "games_per_iter": ("loop", "games_per_iteration"),
    "steps": ("loop", "steps_per_iteration"),
    "concurrent": ("loop", "concurrent_searches"),
    "minibatch": ("loop", "minibatch"),
    "checkpoint_every": ("loop", "checkpoint_every"),
    "probe_every": ("loop", "probe_every"),
    "seed": ("loop", "seed"),
    "workers": ("loop", "workers"),
    "lr": ("loop", "learning_rate"),
    "engine": ("loop", "engine"),
}


def read_config(path) -> dict:
    """Parse a ``key=value`` echo file written by a training run."""
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    for n, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _coerce(cls, name: str, raw: str):
    f = {x.name: x for x in dataclasses.fields(cls)}.get(name)
    if f is None:
        raise UsageError(f"unknown config key {name!r}")
    if raw == "":
        return None
    default = f.default
    t = str(f.type)
    try:
        if "int" in t and "float" not in t:
            return int(raw)
        if "float" in t:
            return float(raw)
        if isinstance(default, bool):
            return raw.lower() in ("1", "true", "yes")
    except ValueError:
        raise UsageError(f"bad value {raw!r} for {name}") from None
    return raw


def effective_train_config(args):
    """Defaults, overlaid by ``--config``, overlaid by explicit flags."""
    values = {"search": {}, "loop": {}}
    game_id, iterations = None, None
    if args.config:
        for k, v in read_config(args.config).items():
            if k == "game":
                game_id = v
            elif k == "iterations":
                iterations = int(v)
            elif k.startswith(("search.", "loop.")):
                sec, name = k.split(".", 1)
                cls = SearchConfig if sec == "search" else TrainLoopConfig
                values[sec][name] = _coerce(cls, name, v)
    for flag, (sec, name) in _TRAIN_FLAGS.items():
        v = getattr(args, flag)
        if v is not None:
            values[sec][name] = v
    if "workers" not in values["loop"]:
        values["loop"]["workers"] = _env_workers()
    game_id = args.game or game_id
    if game_id is None:
        raise UsageError("train needs --game (or --config)")
    iterations = args.iters if args.iters is not None else iterations
    if iterations is None:
        iterations = 100
    try:
        search = SearchConfig(**values["search"])
        loop = TrainLoopConfig(**values["loop"])
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    return game_id, iterations, search, loop


def cmd_train(args) -> int:
    from .training.loop import run_training

    game_id, iterations, search, loop = effective_train_config(args)
    game = _game(game_id)
    out = _out_dir(args.out, f"{game.game_id}-seed{loop.seed}")
    if iterations < 0:
        raise UsageError("--iters must be non-negative")

    def progress(rec):
        extra = f" exploitability={rec['exploitability']:.4f}" if "exploitability" in rec else ""
        print(f"iter {rec['iter']} games={rec['games']} loss={rec['mean_loss']:.4f}"
              f" reservoir={rec['reservoir_size']}{extra}", flush=True)

    run_training(game.game_id, iterations, out, search, loop, progress=progress)
    print(f"wrote {out}/metrics.jsonl, {out}/config.txt and checkpoints in {out}/checkpoints")
    return 0


# -- exploit -------------------------------------------------------------


def cmd_exploit(args) -> int:
    from .evaluation.best_response import best_response_value
    from .evaluation.profiles import NetProfile, UniformProfile
    from .games.tree import has_flat_tree

    game = _game(args.game)
    if not has_flat_tree(game):
        print(f"error: {game.game_id} is too large for exact exploitability", file=sys.stderr)
        return 1
    if args.uniform:
        profile, label = UniformProfile(), "uniform"
    else:
        params = _load_params(args.checkpoint, game)
        profile, label = NetProfile(params), args.checkpoint
    br1 = best_response_value(game, profile, 0)
    br2 = best_response_value(game, profile, 1)
    total = br1 + br2
    print(f"{game.game_id} {label}: exploitability {total:.6f} (br P1 {br1:.6f}, br P2 {br2:.6f})")
    if args.csv:
        path = Path(args.csv)
        new = not path.exists() or path.stat().st_size == 0
        with open(path, "a", newline="") as fh:
            w = csv.writer(fh)
            if new:
                w.writerow(["game", "profile", "br_p1", "br_p2", "exploitability"])
            w.writerow([game.game_id, label, f"{br1:.9f}", f"{br2:.9f}", f"{total:.9f}"])
    return 0


def _load_params(path, game):
    from .apprentice import checkpoint

    try:
        params, _, header = checkpoint.load(path)
    except checkpoint.CheckpointError as exc:
        raise UsageError(str(exc)) from None
    if params.config.input_dim != game.encoding_dim or params.config.output_dim != game.num_actions:
        raise UsageError(
            f"checkpoint {path} (game {header['game']}, input {params.config.input_dim}, output "
            f"{params.config.output_dim}) does not fit {game.game_id} (input {game.encoding_dim}, "
            f"output {game.num_actions})"
        )
    return params


# -- match / tournament --------------------------------------------------


def _agent(spec: str, game):
    from .evaluation.match import parse_agent

    try:
        agent = parse_agent(spec)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    except OSError as exc:
        raise UsageError(f"cannot load agent {spec!r}: {exc}") from None
    params = getattr(agent, "params", None)
    if params is not None and (params.config.input_dim != game.encoding_dim
                               or params.config.output_dim != game.num_actions):
        raise UsageError(
            f"agent {spec!r} expects input {params.config.input_dim} / output {params.config.output_dim}; "
            f"{game.game_id} has {game.encoding_dim} / {game.num_actions}"
        )
    return agent


def cmd_match(args) -> int:
    from .evaluation.match import play_match, write_csv

    game = _game(args.game)
    if args.games < 1:
        raise UsageError("--games must be at least 1")
    a, b = _agent(args.a, game), _agent(args.b, game)
    workers = args.workers if args.workers is not None else _env_workers()
    res = play_match(a, b, game, args.games, args.seed, workers=workers)
    print(f"{'game':<8} {'agent A':<28} {'agent B':<28} {'games':>6} {'win%':>7} {'(se)':>6}")
    print(f"{game.game_id:<8} {a.name:<28} {b.name:<28} {res.games:>6} {res.win_rate_percent:>7.2f} "
          f"({res.stderr_percent:.2f})")
    csv_path = args.csv or _out_dir(None, "matches.csv")
    Path(csv_path).parent.mkdir(parents=True, exist_ok=True)
    write_csv(csv_path, [res])
    print(f"appended to {csv_path}")
    return 0


def cmd_tournament(args) -> int:
    from .evaluation.elo import elo_fit
    from .evaluation.match import play_match, write_csv

    game = _game(args.game)
    if args.games < 1:
        raise UsageError("--games must be at least 1")
    if len(args.agents) < 2:
        raise UsageError("a tournament needs at least two agents")
    agents = [_agent(s, game) for s in args.agents]
    workers = args.workers if args.workers is not None else _env_workers()
    results = []
    for i, j in itertools.combinations(range(len(agents)), 2):
        r = play_match(agents[i], agents[j], game, args.games, args.seed, workers=workers)
        print(r.pretty(), flush=True)
        results.append(r)
    if args.csv:
        write_csv(args.csv, results)
    anchor = args.anchor or agents[0].name
    try:
        table = elo_fit(results, anchor)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(table.pretty())
    return 0


def cmd_elo(args) -> int:
    from .evaluation.elo import elo_fit

    recs = []
    try:
        with open(args.csv, newline="") as fh:
            for row in csv.DictReader(fh):
                score = int(row["wins"]) + 0.5 * int(row["draws"])
                recs.append((row["agent_a"], row["agent_b"], score, int(row["games"])))
    except (OSError, KeyError, ValueError) as exc:
        raise UsageError(f"cannot read match results from {args.csv}: {exc}") from None
    try:
        table = elo_fit(recs, args.anchor)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(table.pretty())
    return 0


# -- play ----------------------------------------------------------------


def cmd_play(args, stdin=None, stdout=None) -> int:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    game = _game(args.game)
    opp = _agent(args.opponent, game)
    human = args.seat - 1
    if human not in (0, 1):
        raise UsageError("--seat must be 1 or 2")
    rng = np.random.default_rng(args.seed)
    opp.reset(game, 1 - human, np.random.default_rng([args.seed, 1]))

    def say(msg=""):
        print(msg, file=stdout, flush=True)

    s = game.initial_state()
    say(f"{game.game_id}: you are player {args.seat} against {opp.name}")
    while s.to_move != TERMINAL:
        p = s.to_move
        if p == 2:
            outs = game._chance(s)
            s = game._next(s, outs[sample_index([pr for _, pr in outs], rng.random())][0])
            continue
        if p != human:
            a = opp.act(MatchView(s, p))
            s = game._next(s, a)
            continue
        legal = game._legal(s)
        say(f"seen: {game.view_text(s, human)}")
        say("actions: " + "  ".join(f"[{i}] {game.action_name(a)}" for i, a in enumerate(legal)))
        while True:
            stdout.write("> ")
            stdout.flush()
            line = stdin.readline()
            if not line:
                say("\nbye")
                return 0
            line = line.strip()
            if line.isdigit() and int(line) < len(legal):
                s = game._next(s, legal[int(line)])
                break
            say(f"enter an index between 0 and {len(legal) - 1}")
    say(f"final: {game.view_text(s, human)}")
    say(f"history: {' '.join(str(a) for a in s.history)}")
    u = game.utility(s, human)
    say(f"your utility {u:+g}, opponent {-u:+g}")
    return 0


# -- describe / report ---------------------------------------------------


def cmd_describe(args) -> int:
    from .games import describe

    _game(args.game)
    info = describe(args.game, as_json=args.json)
    if args.json:
        print(info)
    else:
        for k, v in info.items():
            print(f"{k}: {v}")
    return 0


def cmd_report(args) -> int:
    from .report import render

    for p in args.metrics:
        if not Path(p).exists():
            raise UsageError(f"no such metrics file: {p}")
    written = render(args.metrics, args.out, args.labels)
    if not written:
        print("nothing to plot: metrics have no loss or exploitability fields", file=sys.stderr)
        return 1
    for p in written:
        print(f"wrote {p}")
    return 0


# -- parser --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="exit-oos", description="Expert Iteration with Online Outcome Sampling")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="run the training loop")
    t.add_argument("--game")
    t.add_argument("--iters", type=int)
    t.add_argument("--out")
    t.add_argument("--config", help="key=value echo file from an earlier run")
    t.add_argument("--sims", type=int, help="OOS episodes per decision")
    t.add_argument("--epsilon", type=float)
    t.add_argument("--delta", type=float)
    t.add_argument("--gamma", type=float)
    t.add_argument("--beta-ema", type=float)
    t.add_argument("--targeting", choices=["none", "pst", "ist"])
    t.add_argument("--games-per-iter", type=int)
    t.add_argument("--steps", type=int, help="gradient steps per iteration")
    t.add_argument("--concurrent", type=int)
    t.add_argument("--minibatch", type=int)
    t.add_argument("--checkpoint-every", type=int)
    t.add_argument("--probe-every", type=int)
    t.add_argument("--seed", type=int)
    t.add_argument("--workers", type=int)
    t.add_argument("--lr", type=float)
    t.add_argument("--engine", choices=["auto", "fast", "python"])
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("exploit", help="exact exploitability of a profile")
    e.add_argument("--game", required=True)
    g = e.add_mutually_exclusive_group(required=True)
    g.add_argument("--uniform", action="store_true")
    g.add_argument("--checkpoint")
    e.add_argument("--csv")
    e.set_defaults(func=cmd_exploit)

    m = sub.add_parser("match", help="head-to-head match between two agents")
    m.add_argument("--game", required=True)
    m.add_argument("--a", required=True, help="agent spec, e.g. random, net:c.bin, oos:10000+net:c.bin")
    m.add_argument("--b", required=True)
    m.add_argument("--games", type=int, default=5000)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--csv")
    m.add_argument("--workers", type=int)
    m.set_defaults(func=cmd_match)

    tn = sub.add_parser("tournament", help="round robin plus Elo fit")
    tn.add_argument("--game", required=True)
    tn.add_argument("--agents", nargs="+", required=True)
    tn.add_argument("--games", type=int, default=5000)
    tn.add_argument("--seed", type=int, default=0)
    tn.add_argument("--anchor")
    tn.add_argument("--csv")
    tn.add_argument("--workers", type=int)
    tn.set_defaults(func=cmd_tournament)

    el = sub.add_parser("elo", help="fit Elo ratings from a match CSV")
    el.add_argument("--csv", required=True)
    el.add_argument("--anchor", required=True)
    el.set_defaults(func=cmd_elo)

    p = sub.add_parser("play", help="play against an agent in the terminal")
    p.add_argument("--game", required=True)
    p.add_argument("--opponent", default="random")
    p.add_argument("--seat", type=int, default=1, help="1 or 2")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_play)

    d = sub.add_parser("describe", help="game summary")
    d.add_argument("--game", required=True, help=f"one of {', '.join(GAME_IDS)}")
    d.add_argument("--json", action="store_true")
    d.set_defaults(func=cmd_describe)

    r = sub.add_parser("report", help="render figures from metrics logs")
    r.add_argument("--metrics", nargs="+", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--labels", nargs="+")
    r.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 1
    except Exception as exc:  # surfaced as a runtime failure with context
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        if args.verbose:
            raise
        return 1


if __name__ == "__main__":
    sys.exit(main())
