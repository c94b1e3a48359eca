"""One test per acceptance criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the verdicts inline; they are
also echoed to the terminal when output is captured.
"""

import numpy as np
import pytest

from exit_oos.apprentice.net import NetConfig, forward, grad, init, kl_loss
from exit_oos.evaluation.best_response import best_response_value, exploitability
from exit_oos.evaluation.elo import elo_fit, expected_score, gap_from_score
from exit_oos.evaluation.match import NetAgent, OOSAgent, RandomAgent, play_match
from exit_oos.evaluation.profiles import TabularProfile
from exit_oos.games import load_game
from exit_oos.games.base import P1, P2
from exit_oos.games.tree import flat_tree
from exit_oos.oos import EmaRatio, NodeStats, SearchConfig, average_strategy, ema_update, regret_matching
from exit_oos.oos.fast import FastSearch
from exit_oos.oos.search import PlayoutRequest
from exit_oos.training.loop import TrainLoopConfig, run_training
from exit_oos.training.reservoir import Reservoir
from exit_oos.training.selfplay import EvalRequestQueue, Expert, flush_eval_batch, game_rng, play_games, self_play_game

from oracles import br_oracle, random_tabular, reservoir_ages_reference
from test_apprentice import bias_only, numeric_grad, random_batch, random_net
from test_training import item

pytestmark = pytest.mark.acceptance


@pytest.fixture
def verdict(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {n:>2} {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail

    return emit


@pytest.fixture(scope="session")
def trained(tmp_path_factory):
    """The two desk-scale training runs shared by criteria 5 to 7."""
    root = tmp_path_factory.mktemp("acceptance")
    cfg = SearchConfig(simulations=1000)
    return {
        "leduc": run_training("leduc", 200, root / "leduc", cfg, TrainLoopConfig(seed=0)),
        "goof6": run_training("goof6", 300, root / "goof6", cfg, TrainLoopConfig(seed=0)),
    }


def test_criterion_01_exact_examples(verdict):
    close = lambda a, b: np.allclose(a, b, atol=1e-9, rtol=0)  # noqa: E731
    checks = {
        "regret_matching": close(regret_matching([2, 1, 1]), [0.5, 0.25, 0.25])
        and close(regret_matching([-1, -2]), [0.5, 0.5])
        and close(regret_matching([3, -1, 1]), [0.75, 0, 0.25]),
        "average_strategy": close(average_strategy(NodeStats([0.0] * 3, [0.0] * 3)), [1 / 3] * 3)
        and close(average_strategy(NodeStats([0.0] * 2, [9.0, 1.0])), [0.9, 0.1])
        and close(average_strategy(NodeStats([0.0] * 3, [0.0, 5.0, 0.0])), [0, 1, 0]),
        "ema_update": abs(ema_update(EmaRatio(1.0), 2.0, 1.0, 0.99).r - 1.01) < 1e-9,
        "kl_loss": abs(kl_loss([0.3, 0.7], [0.3, 0.7])) < 1e-12
        and abs(kl_loss([1.0, 0.0], [0.5, 0.5]) / np.log(2) - 1) < 1e-12
        and abs(kl_loss([0.5, 0.5], [0.25, 0.75]) / (0.5 * np.log(2) + 0.5 * np.log(2 / 3)) - 1) < 1e-12,
        "forward": close(forward(bias_only([0.0, 0.0, 0.0]), [1.0], [1, 1, 1]), [1 / 3] * 3)
        and close(forward(bias_only([0.0, 5.0, 0.0]), [1.0], [1, 0, 1]), [0.5, 0, 0.5])
        and close(forward(bias_only([np.log(2.0), 0.0]), [1.0], [1, 1]), [2 / 3, 1 / 3]),
        "elo": abs(gap_from_score(0.5)) < 1e-9 and abs(gap_from_score(0.64) - 99.95) < 0.01
        and abs(expected_score(0.0) - 0.5) < 1e-9,
    }
    bad = [k for k, ok in checks.items() if not ok]
    verdict(1, not bad, f"{len(checks) - len(bad)}/{len(checks)} example groups exact" + (f", failing {bad}" if bad else ""))


def test_criterion_02_gradient(verdict):
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(100):
        params = random_net(rng)
        x, masks, t = random_batch(rng, params.config, 3)
        for a, n in zip(grad(params, x, masks, t), numeric_grad(params, x, masks, t)):
            rel = np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-6)
            worst = max(worst, float(rel.max()))
    verdict(2, worst < 1e-4, f"max relative error {worst:.2e} over 100 nets (bound 1e-4)")


def test_criterion_03_best_response_oracle(verdict):
    rng = np.random.default_rng(3)
    worst = 0.0
    for gid in ("kuhn", "leduc", "liars1", "goof4", "goof5"):
        g = load_game(gid)
        for _ in range(20):
            prof = TabularProfile(random_tabular(g, rng))
            for p in (P1, P2):
                worst = max(worst, abs(best_response_value(g, prof, p) - br_oracle(g, prof, p)))
    verdict(3, worst < 1e-9, f"max |BR - oracle| {worst:.2e} over 5 games x 20 profiles (bound 1e-9)")


def test_criterion_04_oos_convergence(verdict):
    found = {}
    for gid in ("kuhn", "leduc"):
        g = load_game(gid)
        fast = FastSearch(g, flat_tree(g), SearchConfig())
        fast.simulate(None, 1_000_000, np.random.default_rng(4))
        found[gid] = exploitability(g, TabularProfile.from_search_tree(fast.to_search_tree()))
    ok = found["kuhn"] < 0.02 and found["leduc"] < 1.0
    verdict(4, ok, f"after 1e6 episodes kuhn {found['kuhn']:.4f} (< 0.02), leduc {found['leduc']:.4f} (< 1.0)")


def test_criterion_05_leduc_improvement(verdict, trained):
    probes = {r["iter"]: r["exploitability"] for r in trained["leduc"].metrics if "exploitability" in r}
    first, last, best = probes[10], probes[200], min(probes.values())
    ok = last <= 0.5 * first and best < 2.0
    verdict(5, ok, f"probe@10 {first:.3f}, probe@200 {last:.3f} (ratio {last / first:.2f}, need <= 0.5), "
                   f"best {best:.3f} (need < 2.0)")


def net_match(game_id, params, opponent, seed):
    return play_match(NetAgent(params), opponent, load_game(game_id), 2000, seed=seed)


def test_criterion_06_net_beats_random(verdict, trained):
    rates = {gid: net_match(gid, trained[gid].params, RandomAgent(), 6) for gid in ("leduc", "goof6")}
    ok = all(r.win_rate_percent >= 58.0 for r in rates.values())
    detail = ", ".join(f"{gid} {r.win_rate_percent:.1f}% ({r.stderr_percent:.1f})" for gid, r in rates.items())
    verdict(6, ok, f"net vs random over 2000 games: {detail} (need >= 58%)")


def test_criterion_07_net_does_not_beat_teacher(verdict, trained):
    rates = {}
    for gid in ("leduc", "goof6"):
        params = trained[gid].params
        rates[gid] = net_match(gid, params, OOSAgent(SearchConfig(simulations=10_000), params), 7)
    ok = all(r.win_rate_percent <= 55.0 for r in rates.values())
    detail = ", ".join(f"{gid} {r.win_rate_percent:.1f}% ({r.stderr_percent:.1f})" for gid, r in rates.items())
    verdict(7, ok, f"net vs OOS(10k)+net over 2000 games: {detail} (need <= 55%)")


def test_criterion_08_elo_recovery(verdict):
    truth = {"x": 1500.0, "y": 1550.0, "z": 1600.0}
    rng = np.random.default_rng(8)
    games = 100_000
    results = []
    for a in truth:
        for b in truth:
            if a < b:
                results.append((a, b, float(rng.binomial(games, expected_score(truth[a] - truth[b]))), games))
    fitted = elo_fit(results, anchor="x").ratings
    err = max(abs(fitted[k] - v) for k, v in truth.items())
    verdict(8, fitted["x"] == 1500.0 and err <= 10, f"max rating error {err:.2f} (bound 10), anchor {fitted['x']}")


def test_criterion_09_reservoir_ages(verdict):
    cap, n, p, runs = 1000, 100_000, 0.5, 20
    ours, ref = [], []
    rng = np.random.default_rng(9)
    for _ in range(runs):
        res = Reservoir(cap, 1, 1, p)
        res.insert([item(0, 1, 1)] * n, rng)
        ours.append(n - 1 - res.stamps)
        ref.append(reservoir_ages_reference(cap, n, p, rng))
    ours, ref = np.concatenate(ours), np.concatenate(ref)
    edges = np.quantile(ref, [0.2, 0.4, 0.6, 0.8])
    h_ours = np.bincount(np.searchsorted(edges, ours, side="right"), minlength=5) / ours.size
    h_ref = np.bincount(np.searchsorted(edges, ref, side="right"), minlength=5) / ref.size
    tv = 0.5 * float(np.abs(h_ours - h_ref).sum())
    verdict(9, tv < 0.02, f"total variation {tv:.4f} over quintile bins of {runs} runs (bound 0.02)")


def test_criterion_10_batching_and_determinism(verdict, tmp_path):
    g = load_game("leduc")
    search = SearchConfig(simulations=100)
    expert = Expert(g, search, init(NetConfig.for_game(g), np.random.default_rng(10)), "python")
    batched = play_games(expert, [game_rng(10, 0, i) for i in range(20)], concurrent=20, queue=EvalRequestQueue())
    solo = [self_play_game(g, search, expert.params, game_rng(10, 0, i), "python") for i in range(20)]
    same_games = all(
        len(a) == len(b) and all(np.array_equal(x.target, y.target) for x, y in zip(a, b))
        for a, b in zip(batched, solo)
    )
    queue = EvalRequestQueue()
    rng = np.random.default_rng(10)
    reqs = []
    for t in range(20):
        mask = rng.random(g.num_actions) < 0.5
        mask[t % g.num_actions] = True
        reqs.append(PlayoutRequest(rng.random(g.encoding_dim).astype(np.float32), mask))
        queue.submit(t, reqs[-1])
    same_eval = all(np.array_equal(out, forward(expert.params, r.features, r.mask))
                    for (_, out), r in zip(flush_eval_batch(queue, expert.params), reqs))
    loop = TrainLoopConfig(games_per_iteration=8, steps_per_iteration=16, seed=10, workers=1)
    run_training("leduc", 5, tmp_path / "a", search, loop)
    run_training("leduc", 5, tmp_path / "b", search, loop)
    same_logs = (tmp_path / "a" / "metrics.jsonl").read_bytes() == (tmp_path / "b" / "metrics.jsonl").read_bytes()
    verdict(10, same_games and same_eval and same_logs,
            f"batched games equal {same_games}, batched eval equal {same_eval}, repeated run logs equal {same_logs}")
