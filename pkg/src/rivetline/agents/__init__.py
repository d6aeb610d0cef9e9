"""Tabular reference learners: replay/target-table Q-learning and clipped-surrogate PPO."""

from rivetline.agents.ppo import Batch, LossResult, PPOAgent, PPOConfig, ppo_advantages
from rivetline.agents.qlearn import QAgent, QConfig, ReplayBuffer, Transition, argmax
from rivetline.agents.training import (
    EpisodeRecord,
    EvalStats,
    GreedyPolicy,
    TrainLog,
    evaluate,
    load_policy,
    random_policy,
    run_episode,
    save_policy,
    train,
)

__all__ = [
    "Batch", "LossResult", "PPOAgent", "PPOConfig", "ppo_advantages",
    "QAgent", "QConfig", "ReplayBuffer", "Transition", "argmax",
    "EpisodeRecord", "EvalStats", "GreedyPolicy", "TrainLog", "evaluate", "load_policy",
    "random_policy", "run_episode", "save_policy", "train",
]
