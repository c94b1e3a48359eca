import json
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exit_oos.games import GAME_IDS, GameError, describe, load_game
from exit_oos.games.base import CHANCE, P1, P2, TERMINAL, TargetingMode
from exit_oos.games.goofspiel import DRAW, LOSS, WIN, Goofspiel
from exit_oos.games.kuhn import BET, PASS
from exit_oos.games.leduc import CALL, FOLD, RAISE
from exit_oos.games.liars_dice import bid_action, bid_holds, bid_of

SMALL = ["kuhn", "leduc", "liars1", "goof3", "goof4"]


def walk(game, fn):
    """Visit every state of a small game depth-first."""

    def rec(s):
        fn(s)
        if s.to_move == TERMINAL:
            return
        acts = [a for a, _ in game.chance_outcomes(s)] if s.to_move == CHANCE else game.legal_actions(s)
        for a in acts:
            rec(game.apply(s, a))

    rec(game.initial_state())


def random_playthrough(game, rng):
    s = game.initial_state()
    path = [s]
    while s.to_move != TERMINAL:
        if s.to_move == CHANCE:
            outs = game.chance_outcomes(s)
            a = outs[rng.integers(len(outs))][0]
        else:
            legal = game.legal_actions(s)
            a = legal[rng.integers(len(legal))]
        s = game.apply(s, a)
        path.append(s)
    return path


def deal(game, *cards):
    s = game.initial_state()
    for c in cards:
        s = game.apply(s, c)
    return s


# -- registry --------------------------------------------------------------


def test_registry_ids():
    for gid in ["leduc", "goof6", "goof13", "goofN:5", "liars1", "liars2", "kuhn"]:
        g = load_game(gid)
        assert g.encoding_dim > 0 and g.num_actions > 0
    assert load_game("goofN:5").game_id == "goof5"


def test_unknown_game_lists_registry():
    with pytest.raises(GameError) as err:
        load_game("chess")
    for gid in GAME_IDS:
        assert gid in str(err.value)


def test_describe_reports_dims_and_modes():
    info = describe("leduc")
    assert info["encoding_dim"] == 23 and info["max_actions"] == 3
    assert set(info["targeting_modes"]) == {"none", "pst", "ist"}
    js = json.loads(describe("goof6", as_json=True))
    assert js["targeting_modes"] == ["ist", "none"] and js["default_targeting"] == "ist"


def test_targeting_defaults():
    assert load_game("leduc").default_targeting is TargetingMode.PST
    assert load_game("goof6").default_targeting is TargetingMode.IST
    assert load_game("liars1").default_targeting is TargetingMode.PST


# -- legal actions and dynamics ------------------------------------------


def test_leduc_first_actor_can_check_or_raise():
    g = load_game("leduc")
    s = deal(g, 0, 3)
    assert s.to_move == P1
    assert g.legal_actions(s) == [CALL, RAISE]


def test_leduc_raise_cap():
    g = load_game("leduc")
    s = deal(g, 0, 3)
    s = g.apply(s, RAISE)
    s = g.apply(s, RAISE)
    assert g.legal_actions(s) == [FOLD, CALL]


def test_goofspiel6_first_round_bids():
    g = load_game("goof6")
    assert g.legal_actions(g.initial_state()) == list(range(6))


def test_apply_does_not_mutate_and_rejects_illegal():
    g = load_game("leduc")
    s = deal(g, 0, 3)
    before = s
    g.apply(s, RAISE)
    assert s == before
    with pytest.raises(GameError):
        g.apply(s, FOLD)  # nothing to fold against
    with pytest.raises(GameError):
        g.apply(s, 7)


def test_liars_dice_bid_sequence():
    g = load_game("liars1")
    s = deal(g, 0, 0)
    s = g.apply(s, bid_action(1, 2))
    s = g.apply(s, bid_action(1, 3))
    assert bid_of(s.bids[-1]) == (1, 3)
    assert bid_action(1, 2) not in g.legal_actions(s)


def test_goofspiel_tied_round_awards_nothing():
    g = load_game("goof6")
    s = g.apply(g.apply(g.initial_state(), 4), 4)
    assert s.points == (0, 0)
    assert g.outcomes(s, P1) == [DRAW] and g.outcomes(s, P2) == [DRAW]


def test_goofspiel_outcomes_from_each_view():
    g = load_game("goof6")
    s = g.apply(g.apply(g.initial_state(), 1), 2)
    assert g.outcomes(s, P1) == [LOSS] and g.outcomes(s, P2) == [WIN]


def test_terminal_queries_raise():
    g = load_game("kuhn")
    s = deal(g, 0, 1)
    s = g.apply(g.apply(s, PASS), PASS)
    assert s.to_move == TERMINAL
    with pytest.raises(GameError):
        g.legal_actions(s)
    with pytest.raises(GameError):
        g.chance_outcomes(deal(g, 0, 1))
    with pytest.raises(GameError):
        g.utility(deal(g, 0, 1), P1)
    with pytest.raises(GameError):
        g.infoset_key(s, CHANCE)
    with pytest.raises(GameError):
        g.encode(s, CHANCE)


# -- chance ----------------------------------------------------------------


def test_leduc_chance_laws():
    g = load_game("leduc")
    first = g.chance_outcomes(g.initial_state())
    assert len(first) == 6 and all(abs(p - 1 / 6) < 1e-15 for _, p in first)
    s = g.apply(g.apply(deal(g, 0, 3), CALL), CALL)
    board = g.chance_outcomes(s)
    assert len(board) == 4 and all(abs(p - 0.25) < 1e-15 for _, p in board)


def test_liars_dice_single_die_roll():
    g = load_game("liars1")
    outs = g.chance_outcomes(g.initial_state())
    assert len(outs) == 6 and all(abs(p - 1 / 6) < 1e-15 for _, p in outs)


def test_liars_dice_two_dice_roll_is_multinomial():
    g = load_game("liars2")
    outs = g.chance_outcomes(g.initial_state())
    assert len(outs) == 21
    probs = sorted(p for _, p in outs)
    assert abs(sum(probs) - 1.0) < 1e-12
    assert abs(probs[0] - 1 / 36) < 1e-15 and abs(probs[-1] - 2 / 36) < 1e-15


@pytest.mark.parametrize("gid", SMALL)
def test_chance_sums_and_nonempty_actions(gid):
    g = load_game(gid)

    def check(s):
        if s.to_move == CHANCE:
            outs = g.chance_outcomes(s)
            assert all(p > 0 for _, p in outs)
            assert abs(sum(p for _, p in outs) - 1.0) < 1e-12
        elif s.to_move != TERMINAL:
            legal = g.legal_actions(s)
            assert legal and len(set(legal)) == len(legal)
            assert legal == sorted(legal)

    walk(g, check)


# -- utilities -------------------------------------------------------------


def test_leduc_check_down_pair_wins_antes():
    g = load_game("leduc")
    # P1 holds a jack, P2 a queen, board is the other jack
    s = deal(g, 0, 2)
    s = g.apply(g.apply(s, CALL), CALL)
    s = g.apply(s, 1)
    s = g.apply(g.apply(s, CALL), CALL)
    assert s.to_move == TERMINAL
    assert g.utility(s, P1) == 1.0 and g.utility(s, P2) == -1.0


def test_leduc_equal_hands_draw():
    g = load_game("leduc")
    s = deal(g, 0, 1)  # both jacks
    s = g.apply(g.apply(s, RAISE), CALL)
    s = g.apply(s, 4)
    s = g.apply(g.apply(s, CALL), CALL)
    assert g.utility(s, P1) == 0.0


def test_leduc_fold_loses_contribution():
    g = load_game("leduc")
    s = deal(g, 0, 2)
    s = g.apply(g.apply(s, RAISE), FOLD)
    assert g.utility(s, P1) == 1.0
    s = deal(g, 0, 2)
    s = g.apply(g.apply(g.apply(s, RAISE), RAISE), FOLD)
    assert g.utility(s, P1) == -3.0


def test_liars_dice_wild_six_makes_bid_hold():
    g = load_game("liars1")
    # P1 rolls 3, P2 rolls 6; last bid "two 3s" then liar
    rolls = g.rolls
    s = deal(g, rolls.index((3,)), rolls.index((6,)))
    s = g.apply(s, bid_action(2, 3))
    s = g.apply(s, g.liar)
    assert bid_holds(2, 3, (3, 6))
    assert g.utility(s, P2) == -1.0 and g.utility(s, P1) == 1.0


def test_liars_dice_sixes_only_count_as_sixes():
    assert bid_holds(2, 6, (6, 6))
    assert not bid_holds(2, 6, (6, 5))
    assert bid_holds(2, 5, (6, 5))


def test_goofspiel_sign_and_margin_utilities():
    g = Goofspiel(3)
    gm = Goofspiel(3, margin_utility=True)
    for game in (g, gm):
        s = game.initial_state()
        for a, b in [(0, 1), (1, 0), (2, 2)]:
            s = game.apply(game.apply(s, a), b)
        assert s.to_move == TERMINAL
    # P1 won round 1 (1 point), P2 won round 0 (0 points), round 2 drawn
    assert g.utility(s, P1) == 1.0
    s2 = gm.initial_state()
    for a, b in [(0, 1), (1, 0), (2, 2)]:
        s2 = gm.apply(gm.apply(s2, a), b)
    assert gm.utility(s2, P1) == 1.0
    s3 = gm.initial_state()
    for a, b in [(2, 0), (0, 1), (1, 2)]:
        s3 = gm.apply(gm.apply(s3, a), b)
    assert gm.utility(s3, P1) == -3.0


@pytest.mark.parametrize("gid", SMALL)
def test_zero_sum_everywhere(gid):
    g = load_game(gid)

    def check(s):
        if s.to_move == TERMINAL:
            assert g.utility(s, P1) + g.utility(s, P2) == 0.0

    walk(g, check)


# -- infosets --------------------------------------------------------------


def test_leduc_hidden_card_does_not_change_key():
    g = load_game("leduc")
    a = g.apply(deal(g, 0, 2), RAISE)
    b = g.apply(deal(g, 0, 4), RAISE)
    assert g.infoset_key(a, P1) == g.infoset_key(b, P1)
    assert g.infoset_key(a, P2) != g.infoset_key(b, P2)


def test_leduc_suits_are_invisible():
    g = load_game("leduc")
    assert g.infoset_key(deal(g, 0, 2), P1) == g.infoset_key(deal(g, 1, 2), P1)


def test_goofspiel_hidden_bids_share_key():
    g = load_game("goof6")
    # P1 bids 3 and loses round 0 either way: P2 bid 4 or 5
    a = g.apply(g.apply(g.initial_state(), 3), 4)
    b = g.apply(g.apply(g.initial_state(), 3), 5)
    assert g.infoset_key(a, P1) == g.infoset_key(b, P1)
    c = g.apply(g.apply(g.initial_state(), 3), 2)
    assert g.infoset_key(a, P1) != g.infoset_key(c, P1)


def test_keys_of_different_owners_never_collide():
    g = load_game("leduc")
    s = deal(g, 0, 0 + 2)
    assert g.infoset_key(s, P1)[0] == P1 and g.infoset_key(s, P2)[0] == P2


def collect_infosets(game):
    members = {}

    def visit(s):
        if s.to_move in (P1, P2):
            members.setdefault(game.infoset_key(s, s.to_move), []).append(s)

    walk(game, visit)
    return members


def test_leduc_has_288_infosets():
    assert len(collect_infosets(load_game("leduc"))) == 288


def leduc_rank_states(members):
    """Distinct opponent ranks per infoset (suits collapsed)."""
    out = {}
    for key, states in members.items():
        out[key] = len({s.cards[1 - s.to_move] // 2 for s in states})
    return out


@pytest.mark.xfail(strict=True, reason="infosets whose card pairs the board leave only two opponent ranks")
def test_leduc_every_infoset_has_three_states():
    sizes = leduc_rank_states(collect_infosets(load_game("leduc")))
    assert set(sizes.values()) == {3}


def test_leduc_infoset_sizes_follow_deck():
    g = load_game("leduc")
    members = collect_infosets(g)
    sizes = leduc_rank_states(members)
    for key, states in members.items():
        s = states[0]
        me = s.to_move
        paired = len(s.cards) == 3 and s.cards[me] // 2 == s.cards[2] // 2
        assert sizes[key] == (2 if paired else 3)
    # 18 first-round infosets, 270 after the board, a third of those paired
    assert Counter(sizes.values()) == {3: 198, 2: 90}


def test_goofspiel6_infoset_count_order():
    from exit_oos.games.tree import flat_tree

    n = flat_tree(load_game("goof6")).num_infosets
    assert 5e4 <= n <= 5e5


@pytest.mark.parametrize("gid", ["kuhn", "leduc", "liars1", "goof4"])
def test_equal_keys_give_equal_vectors(gid):
    g = load_game(gid)
    seen = {}

    def check(s):
        if s.to_move not in (P1, P2):
            return
        for p in (P1, P2):
            key = g.infoset_key(s, p)
            vec = g.encode(s, p)
            assert vec.shape == (g.encoding_dim,)
            if key in seen:
                assert np.array_equal(seen[key], vec)
            else:
                seen[key] = vec

    walk(g, check)


def test_leduc_king_opening_encoding():
    g = load_game("leduc")
    x = g.encode(deal(g, 4, 0), P1)
    assert x[4] == 1.0 and x[:6].sum() == 1.0
    assert x[12] == 1.0 and x[6:13].sum() == 1.0  # board not dealt
    assert x[13:].sum() == 0.0


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(["kuhn", "leduc", "liars1", "liars2", "goof4", "goof6", "goof13"]), st.integers(0, 2**32 - 1))
def test_perfect_recall_keys_grow_by_appending(gid, seed):
    g = load_game(gid)
    path = random_playthrough(g, np.random.default_rng(seed))
    for p in (P1, P2):
        keys = [g.infoset_key(s, p) for s in path]
        for a, b in zip(keys, keys[1:]):
            assert b.startswith(a)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["leduc", "liars2", "goof13"]), st.integers(0, 2**32 - 1))
def test_random_play_zero_sum_and_dims(gid, seed):
    g = load_game(gid)
    path = random_playthrough(g, np.random.default_rng(seed))
    for s in path[:-1]:
        if s.to_move in (P1, P2):
            assert g.encode(s, s.to_move).shape == (g.encoding_dim,)
            assert g.legal_mask(s).sum() == len(g.legal_actions(s))
    end = path[-1]
    assert g.utility(end, P1) == -g.utility(end, P2)


def test_view_text_never_shows_opponent_private_info():
    g = load_game("leduc")
    s = deal(g, 0, 5)  # P1 jack, P2 king
    assert "K" not in g.view_text(s, P1)
    assert "K" in g.view_text(s, P2)
    lg = load_game("liars1")
    s = deal(lg, lg.rolls.index((2,)), lg.rolls.index((5,)))
    assert "5" not in lg.view_text(s, P1)
