import numpy as np
import pytest

from exit_oos.games import GameError, load_game
from exit_oos.games.base import CHANCE, TERMINAL
from exit_oos.games.tree import FlatTree, build_tree, flat_tree, has_flat_tree


def check_tree(game, tree):
    """Walk the game recursively alongside the flat arrays."""
    count = 0

    def rec(s, n):
        nonlocal count
        count += 1
        assert tree.player[n] == s.to_move
        if s.to_move == TERMINAL:
            assert tree.child_start[n] == -1
            assert tree.utility[n] == game._returns(s)
            return
        start, k = tree.child_start[n], tree.n_children[n]
        if s.to_move == CHANCE:
            outs = game.chance_outcomes(s)
            assert k == len(outs)
            for i, (a, p) in enumerate(outs):
                c = start + i
                assert tree.action[c] == a and tree.prob[c] == p and tree.parent[c] == n
                rec(game.apply(s, a), c)
            return
        legal = game.legal_actions(s)
        iid = tree.infoset[n]
        assert tree.keys[iid] == game.infoset_key(s, s.to_move)
        assert list(tree.iset_actions[iid][: tree.iset_nact[iid]]) == legal
        assert np.array_equal(tree.features[iid], game.encode(s, s.to_move).astype(np.float32))
        for i, a in enumerate(legal):
            c = start + i
            assert tree.action[c] == a and tree.depth[c] == tree.depth[n] + 1
            rec(game.apply(s, a), c)

    rec(game.initial_state(), 0)
    assert count == tree.num_nodes


@pytest.mark.parametrize("gid", ["kuhn", "leduc", "liars1", "goof4"])
def test_flat_tree_mirrors_game(gid):
    g = load_game(gid)
    check_tree(g, build_tree(g))


def test_levels_are_contiguous():
    t = flat_tree(load_game("leduc"))
    assert np.all(np.diff(t.depth) >= 0)
    for d in range(t.max_depth + 1):
        lo, hi = t.level_start[d], t.level_start[d + 1]
        assert np.all(t.depth[lo:hi] == d)


def test_cache_round_trip(tmp_path):
    g = load_game("kuhn")
    t = build_tree(g)
    t.save(tmp_path / "kuhn.npz")
    back = FlatTree.load(tmp_path / "kuhn.npz", "kuhn")
    assert back.keys == t.keys
    for name in FlatTree._ARRAYS:
        assert np.array_equal(getattr(back, name), getattr(t, name))


def test_node_of_follows_history():
    g = load_game("kuhn")
    t = flat_tree(g)
    assert t.node_of(()) == 0
    n = t.node_of((0, 1, 1))
    assert t.action[n] == 1 and t.depth[n] == 3
    with pytest.raises(GameError):
        t.node_of((0, 0))


def test_large_games_have_no_flat_tree():
    for gid in ("goof13", "liars2"):
        g = load_game(gid)
        assert not has_flat_tree(g)
        with pytest.raises(GameError):
            flat_tree(g)


def test_node_cap():
    with pytest.raises(GameError):
        build_tree(load_game("leduc"), max_nodes=100)
