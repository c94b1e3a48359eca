"""Expert Iteration training: self-play, experience reservoir and the outer loop."""

from .loop import TrainLoopConfig, TrainerState, new_trainer, run_training, training_iteration
from .reservoir import Reservoir, reservoir_insert
from .selfplay import EvalRequestQueue, ExperienceTuple, flush_eval_batch, play_games, self_play_game

__all__ = [
    "EvalRequestQueue",
    "ExperienceTuple",
    "Reservoir",
    "TrainLoopConfig",
    "TrainerState",
    "flush_eval_batch",
    "new_trainer",
    "play_games",
    "reservoir_insert",
    "run_training",
    "self_play_game",
    "training_iteration",
]
