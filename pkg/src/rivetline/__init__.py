"""Model-factory test bed for reinforcement learning.

A deterministic simulator of a riveting and color-sorting plant, an
address-space layer exposing its sensors and actuators with change
notifications, a gym-style environment with two reward functions, tabular
Q-learning and PPO reference agents, and a TCP protocol for remote agents.
"""

from rivetline.env import Environment, RewardConfig, RewardMode, StepResult, episode_return, make_env, reward_of
from rivetline.factory import (
    Action,
    Cell,
    Color,
    FactoryConfig,
    FactoryState,
    Product,
    SensorSnapshot,
    TableOrientation,
    apply,
    init_state,
    is_done,
    snapshot,
    state_index,
)
from rivetline.infomodel import AddressSpace, build_address_space, local_plant
from rivetline.oracle import solve_optimal

__version__ = "0.1.0"

__all__ = [
    "Action", "Cell", "Color", "FactoryConfig", "FactoryState", "Product", "SensorSnapshot", "TableOrientation",
    "apply", "init_state", "is_done", "snapshot", "state_index", "solve_optimal",
    "AddressSpace", "build_address_space", "local_plant",
    "Environment", "RewardConfig", "RewardMode", "StepResult", "episode_return", "make_env", "reward_of",
]
