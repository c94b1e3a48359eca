"""Flat array form of small game trees.

Nodes are numbered breadth-first, so the children of a node are contiguous
(``child_start[n] + k`` is the child reached by the node's k-th legal action)
and every level of the tree is a contiguous block.  Arrays are cached on disk
because building Goofspiel(6) walks about two million states.
"""

from __future__ import annotations

import logging
import os
from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .base import CHANCE, PUBLIC, TERMINAL, Game, GameError, TargetingMode

log = logging.getLogger(__name__)

FORMAT_VERSION = 3
MAX_NODES = 3_000_000
FLAT_GAMES = ("kuhn", "leduc", "liars1", "goof1", "goof2", "goof3", "goof4", "goof5", "goof6")


def cache_dir() -> Path:
    root = os.environ.get("EXIT_OOS_CACHE") or os.path.join(
        os.environ.get("XDG_CACHE_HOME", os.path.expanduser("~/.cache")), "exit_oos"
    )
    return Path(root)


@dataclass
class FlatTree:
    game_id: str
    num_actions: int
    player: np.ndarray  # int8: 0/1 players, 2 chance, -1 terminal
    parent: np.ndarray  # int32
    depth: np.ndarray  # int32
    child_start: np.ndarray  # int32, -1 at terminals
    n_children: np.ndarray  # int32
    action: np.ndarray  # int32, action id on the edge into the node
    prob: np.ndarray  # float64, chance probability of the edge into the node
    utility: np.ndarray  # float64, P1 utility at terminals
    infoset: np.ndarray  # int32, decision infoset of the actor, -1 otherwise
    obs_id: np.ndarray  # int32 [n, 3]: interned stream ids for P1, P2, public
    keys: list  # infoset id -> key bytes
    iset_player: np.ndarray  # int8
    iset_actions: np.ndarray  # int32 [I, A], -1 padded, in child order
    iset_nact: np.ndarray  # int32
    features: np.ndarray  # float32 [I, dim]
    level_start: np.ndarray  # int64, node id where each depth begins

    @property
    def num_nodes(self) -> int:
        return len(self.player)

    @property
    def num_infosets(self) -> int:
        return len(self.keys)

    @property
    def max_depth(self) -> int:
        return len(self.level_start) - 2

    @property
    def masks(self) -> np.ndarray:
        m = np.zeros((self.num_infosets, self.num_actions), dtype=bool)
        rows, cols = np.nonzero(self.iset_actions >= 0)
        m[rows, self.iset_actions[rows, cols]] = True
        return m

    def key_index(self) -> dict:
        idx = getattr(self, "_key_index", None)
        if idx is None:
            idx = {k: i for i, k in enumerate(self.keys)}
            self._key_index = idx
        return idx

    def node_of(self, history) -> int:
        """Node id reached by following ``history`` from the root."""
        n = 0
        for a in history:
            start = self.child_start[n]
            if start < 0:
                raise GameError("history runs past a terminal node")
            kids = self.action[start : start + self.n_children[n]]
            hit = np.nonzero(kids == a)[0]
            if len(hit) == 0:
                raise GameError(f"action {a} is not legal at node {n}")
            n = int(start + hit[0])
        return n

    def target_marks(self, node: int, player: int, mode) -> np.ndarray:
        """Ancestors-or-self of every history in the targeted set of ``node``.

        The targeted set holds all nodes at the same depth sharing the
        searcher's stream (IST) or the public stream (PST).
        """
        mode = TargetingMode.parse(mode)
        marks = np.zeros(self.num_nodes, dtype=np.bool_)
        d = int(self.depth[node])
        lo, hi = self.level_start[d], self.level_start[d + 1]
        col = PUBLIC if mode is TargetingMode.PST else player
        level_ids = self.obs_id[lo:hi, col]
        frontier = lo + np.nonzero(level_ids == self.obs_id[node, col])[0]
        while len(frontier):
            marks[frontier] = True
            frontier = np.unique(self.parent[frontier])
            frontier = frontier[frontier >= 0]
            frontier = frontier[~marks[frontier]]
        return marks

    # -- persistence ---------------------------------------------------

    _ARRAYS = (
        "player", "parent", "depth", "child_start", "n_children", "action", "prob", "utility",
        "infoset", "obs_id", "iset_player", "iset_actions", "iset_nact", "features", "level_start",
    )

    def save(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        blob = b"".join(self.keys)
        offsets = np.cumsum([0] + [len(k) for k in self.keys]).astype(np.int64)
        arrays = {name: getattr(self, name) for name in self._ARRAYS}
        tmp = path.with_suffix(".tmp.npz")
        np.savez(tmp, key_blob=np.frombuffer(blob, dtype=np.uint8), key_offsets=offsets,
                 meta=np.array([FORMAT_VERSION, self.num_actions]), **arrays)
        os.replace(tmp, path)

    @classmethod
    def load(cls, path: Path, game_id: str) -> "FlatTree":
        with np.load(path) as z:
            if int(z["meta"][0]) != FORMAT_VERSION:
                raise ValueError("stale tree cache")
            blob = z["key_blob"].tobytes()
            off = z["key_offsets"]
            keys = [blob[off[i] : off[i + 1]] for i in range(len(off) - 1)]
            arrays = {name: z[name] for name in cls._ARRAYS}
            return cls(game_id=game_id, num_actions=int(z["meta"][1]), keys=keys, **arrays)


def build_tree(game: Game, max_nodes: int = MAX_NODES) -> FlatTree:
    """Enumerate every history of ``game`` breadth-first."""
    player, parent, depth, child_start, n_children = [], [], [], [], []
    action, prob, utility, infoset, obs_id = [], [], [], [], []
    stream_ids: dict = {}
    iset_ids: dict = {}
    iset_player, iset_actions, iset_depth, features, keys = [], [], [], [], []

    queue = deque([(game.initial_state(), -1, -1, 1.0, 0)])
    nid = 0
    while queue:
        s, par, act, pr, d = queue.popleft()
        nid += 1
        if nid > max_nodes:
            raise GameError(f"{game.game_id} exceeds {max_nodes} nodes; too large for a flat tree")
        who = s.to_move
        player.append(who)
        parent.append(par)
        depth.append(d)
        action.append(act)
        prob.append(pr)
        ids = []
        for stream in (0, 1, PUBLIC):
            k = (stream, s.obs[stream])
            sid = stream_ids.get(k)
            if sid is None:
                sid = stream_ids[k] = len(stream_ids)
            ids.append(sid)
        obs_id.append(ids)
        me = len(player) - 1
        if who == TERMINAL:
            child_start.append(-1)
            n_children.append(0)
            utility.append(game._returns(s))
            infoset.append(-1)
            continue
        utility.append(0.0)
        first = me + len(queue) + 1
        child_start.append(first)
        if who == CHANCE:
            outs = game._chance(s)
            n_children.append(len(outs))
            infoset.append(-1)
            for a, p in outs:
                queue.append((game._next(s, a), me, a, p, d + 1))
            continue
        legal = game._legal(s)
        n_children.append(len(legal))
        k = (who, s.obs[who])
        iid = iset_ids.get(k)
        if iid is None:
            iid = iset_ids[k] = len(keys)
            keys.append(game.infoset_key(s, who))
            iset_player.append(who)
            row = np.full(game.num_actions, -1, dtype=np.int32)
            row[: len(legal)] = legal
            iset_actions.append(row)
            iset_depth.append(d)
            features.append(game.encode(s, who))
        elif iset_depth[iid] != d:
            raise GameError("infoset spans several depths; flat solvers assume it does not")
        infoset.append(iid)
        for a in legal:
            queue.append((game._next(s, a), me, a, 1.0, d + 1))

    depth_arr = np.asarray(depth, dtype=np.int32)
    level_start = np.searchsorted(depth_arr, np.arange(depth_arr.max() + 2)).astype(np.int64)
    return FlatTree(
        game_id=game.game_id,
        num_actions=game.num_actions,
        player=np.asarray(player, dtype=np.int8),
        parent=np.asarray(parent, dtype=np.int32),
        depth=depth_arr,
        child_start=np.asarray(child_start, dtype=np.int32),
        n_children=np.asarray(n_children, dtype=np.int32),
        action=np.asarray(action, dtype=np.int32),
        prob=np.asarray(prob, dtype=np.float64),
        utility=np.asarray(utility, dtype=np.float64),
        infoset=np.asarray(infoset, dtype=np.int32),
        obs_id=np.asarray(obs_id, dtype=np.int32),
        keys=keys,
        iset_player=np.asarray(iset_player, dtype=np.int8),
        iset_actions=np.asarray(iset_actions, dtype=np.int32).reshape(-1, game.num_actions),
        iset_nact=(np.asarray(iset_actions, dtype=np.int32).reshape(-1, game.num_actions) >= 0).sum(1).astype(np.int32),
        features=np.asarray(features, dtype=np.float32).reshape(-1, game.encoding_dim),
        level_start=level_start,
    )


_MEMO: dict = {}


def has_flat_tree(game: Game) -> bool:
    return game.game_id in FLAT_GAMES and not getattr(game, "margin_utility", False)


def flat_tree(game: Game, use_cache: bool = True) -> FlatTree:
    """Flat tree for ``game``, memoised in-process and cached on disk."""
    if not has_flat_tree(game):
        raise GameError(f"{game.game_id} is too large for exhaustive traversal")
    gid = game.game_id
    if gid in _MEMO:
        return _MEMO[gid]
    path = cache_dir() / f"tree-{gid}-v{FORMAT_VERSION}.npz"
    tree = None
    if use_cache and path.exists():
        try:
            tree = FlatTree.load(path, gid)
        except (OSError, ValueError, KeyError) as exc:
            log.warning("ignoring unreadable tree cache %s: %s", path, exc)
    if tree is None:
        log.info("building flat tree for %s", gid)
        tree = build_tree(game)
        if use_cache:
            try:
                tree.save(path)
            except OSError as exc:
                log.warning("could not write tree cache %s: %s", path, exc)
    _MEMO[gid] = tree
    return tree
