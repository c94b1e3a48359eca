"""Bradley-Terry (Elo-scale) ratings from pairwise results, draws as half wins."""

from __future__ import annotations

import math
from collections import defaultdict, deque
from dataclasses import dataclass

ANCHOR_RATING = 1500.0


@dataclass
class EloTable:
    ratings: dict
    anchor: str
    anchor_rating: float = ANCHOR_RATING

    def pretty(self) -> str:
        width = max(len(a) for a in self.ratings)
        lines = []
        for agent, r in sorted(self.ratings.items(), key=lambda kv: -kv[1]):
            tag = " (fixed)" if agent == self.anchor else ""
            lines.append(f"{agent:<{width}}  {r:8.1f}{tag}")
        return "\n".join(lines)


def expected_score(delta: float) -> float:
    """Expected score of a player rated ``delta`` points above the opponent."""
    return 1.0 / (1.0 + 10.0 ** (-delta / 400.0))


def gap_from_score(score: float) -> float:
    return 400.0 * math.log10(score / (1.0 - score))


def _records(results):
    """Normalise inputs to ``(a, b, score_a, games)`` tuples."""
    out = []
    for r in results:
        if hasattr(r, "agent_a"):
            out.append((r.agent_a, r.agent_b, r.score, r.games))
        else:
            a, b, score, games = r
            out.append((a, b, float(score), int(games)))
    return out


def elo_fit(results, anchor: str, anchor_rating: float = ANCHOR_RATING, tol: float = 1e-10,
            max_iter: int = 100_000) -> EloTable:
    """Maximum-likelihood ratings via minorisation-maximisation.

    ``results`` holds MatchResult objects or ``(a, b, score_a, games)`` tuples.
    """
    recs = _records(results)
    wins = defaultdict(float)
    games = defaultdict(float)
    adj = defaultdict(set)
    for a, b, score, n in recs:
        if n <= 0 or a == b:
            continue
        wins[a] += score
        wins[b] += n - score
        games[(a, b)] += n
        games[(b, a)] += n
        adj[a].add(b)
        adj[b].add(a)
    agents = sorted(adj)
    if anchor not in adj:
        raise ValueError(f"anchor {anchor!r} has no games")
    seen = {anchor}
    todo = deque([anchor])
    while todo:
        for nb in adj[todo.popleft()]:
            if nb not in seen:
                seen.add(nb)
                todo.append(nb)
    missing = [a for a in agents if a not in seen]
    if missing:
        raise ValueError(f"agents with no path of games to the anchor: {', '.join(missing)}")
    for a in agents:
        total = sum(games[(a, b)] for b in adj[a])
        if wins[a] <= 0.0 or wins[a] >= total:
            raise ValueError(f"rating of {a!r} is unbounded (score 0% or 100%)")

    gamma = {a: 1.0 for a in agents}
    for _ in range(max_iter):
        new = {}
        for a in agents:
            denom = sum(games[(a, b)] / (gamma[a] + gamma[b]) for b in adj[a])
            new[a] = wins[a] / denom
        scale = new[anchor]
        new = {a: g / scale for a, g in new.items()}
        change = max(abs(math.log(new[a] / gamma[a])) for a in agents)
        gamma = new
        if change < tol:
            break
    ratings = {a: anchor_rating + 400.0 * math.log10(gamma[a]) for a in agents}
    ratings[anchor] = anchor_rating
    return EloTable(ratings, anchor, anchor_rating)
