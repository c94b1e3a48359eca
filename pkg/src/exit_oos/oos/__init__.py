"""Online Outcome Sampling: tabular core, reference engine and compiled engine."""

from .core import (
    EmaRatio,
    NodeStats,
    SearchConfig,
    SearchTree,
    UniformStream,
    average_strategy,
    ema_update,
    regret_matching,
)
from .search import (
    NetPlayout,
    PlayoutRequest,
    UniformPlayout,
    diagnostics,
    run_search,
    search_episodes,
    simulate_episode,
    simulate_once,
)

__all__ = [
    "EmaRatio",
    "NetPlayout",
    "NodeStats",
    "PlayoutRequest",
    "SearchConfig",
    "SearchTree",
    "UniformPlayout",
    "UniformStream",
    "average_strategy",
    "diagnostics",
    "ema_update",
    "regret_matching",
    "run_search",
    "search_episodes",
    "simulate_episode",
    "simulate_once",
]
