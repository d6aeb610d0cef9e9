"""Gym-style environment on top of an address space.

The RL mapper walks the address space once: every ``RL_METHOD`` node becomes
an action index and every ``RL_VARIABLE`` node an observation slot, both in
NodeId order.  Steps are method calls; the observation is kept current by
applying the notifications of an internal subscription.  The plant can be a
local :class:`~rivetline.infomodel.AddressSpace` or a remote
:class:`~rivetline.client.ClientSession`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

from rivetline.errors import ConfigError, UsageError
from rivetline.factory import (
    Collision,
    Color,
    Completed,
    Delivered,
    Event,
    FactoryConfig,
    InvalidAction,
)
from rivetline.infomodel import DONE_ID, RESET_ID, NodeClass, TypeTag, local_plant


class RewardMode(Enum):
    R1 = "R1"
    R2 = "R2"


@dataclass(frozen=True)
class RewardConfig:
    """Reward magnitudes.  R1 ignores ``step_cost``; R2 charges it once per step."""

    mode: RewardMode = RewardMode.R2
    correct_sort: float = 25.0
    completion: float = 100.0
    collision: float = -10.0
    incorrect_sort: float = -50.0
    invalid: float = -5.0
    step_cost: float = -1.0

    def __post_init__(self):
        object.__setattr__(self, "mode", RewardMode(self.mode))
        for name in ("correct_sort", "completion", "collision", "incorrect_sort", "invalid", "step_cost"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError("must be finite", f"reward.{name}")
        if self.step_cost > 0:
            raise ConfigError("step cost must be <= 0", "reward.stepCost")


def reward_of(events: Sequence[Event], config: RewardConfig) -> float:
    """Reward of one step given the events its action produced."""
    total = config.step_cost if config.mode is RewardMode.R2 else 0.0
    for ev in events:
        if isinstance(ev, Collision):
            total += config.collision
        elif isinstance(ev, InvalidAction):
            total += config.invalid
        elif isinstance(ev, Delivered):
            total += config.correct_sort if ev.correct else config.incorrect_sort
        elif isinstance(ev, Completed) and ev.all_correct:
            total += config.completion
    return total


@dataclass(frozen=True)
class StepResult:
    observation: tuple[int, ...]
    reward: float
    done: bool
    events: list[Event]


def episode_return(trajectory: Sequence[StepResult], discount: float = 1.0) -> float:
    if not 0 < discount <= 1:
        raise ValueError("discount must lie in (0, 1]")
    total, weight = 0.0, 1.0
    for result in trajectory:
        total += weight * result.reward
        weight *= discount
    return total


def state_key(observation: Sequence[int]) -> str:
    """Tabular key of an observation; equals :func:`rivetline.factory.state_index` of its snapshot."""
    return ",".join(map(str, observation))


def _walk(plant, root: str = "Factory"):
    for node in plant.browse(root):
        yield node
        if node.node_class is NodeClass.OBJECT:
            yield from _walk(plant, str(node.id))


class Environment:
    def __init__(self, plant, factory: FactoryConfig, reward: Optional[RewardConfig] = None):
        self.plant = plant
        self.factory = factory
        self.reward_config = reward or RewardConfig()
        nodes = list(_walk(plant))
        self.action_nodes = sorted(n.id for n in nodes if n.type_tag is TypeTag.RL_METHOD)
        self.observation_nodes = sorted(n.id for n in nodes if n.type_tag is TypeTag.RL_VARIABLE)
        self._slot = {str(nid): i for i, nid in enumerate(self.observation_nodes)}
        self._subscription = plant.subscribe([*map(str, self.observation_nodes), DONE_ID])
        self._obs = [plant.read(str(nid)) for nid in self.observation_nodes]
        self._done = bool(plant.read(DONE_ID))
        self.steps = 0

    @property
    def action_count(self) -> int:
        return len(self.action_nodes)

    @property
    def action_names(self) -> list[str]:
        return [nid.identifier.rsplit(".", 1)[1] for nid in self.action_nodes]

    @property
    def observation(self) -> tuple[int, ...]:
        return tuple(self._obs)

    @property
    def done(self) -> bool:
        return self._done

    def state_key(self) -> str:
        return state_key(self._obs)

    def _absorb(self) -> None:
        for note in self._subscription.drain():
            if note.node_id == DONE_ID:
                self._done = bool(note.new_value)
            else:
                self._obs[self._slot[note.node_id]] = note.new_value

    def reset(self, seed: Optional[int] = None) -> tuple[int, ...]:
        """Restart the plant (reseeding it if ``seed`` is given) and return the first observation."""
        if seed is not None:
            self.factory = FactoryConfig(self.factory.n_products, seed, self.factory.forced_colors,
                                         self.factory.max_steps)
        f = self.factory
        args = {
            "seed": f.seed,
            "nProducts": f.n_products,
            "forcedColors": [c.value for c in f.forced_colors] if f.forced_colors else [],
            "maxSteps": f.step_limit,
        }
        self.plant.call(RESET_ID, args)
        self._absorb()
        self.steps = 0
        return self.observation

    def step(self, action: int) -> StepResult:
        if not 0 <= action < len(self.action_nodes):
            raise UsageError(f"action index {action} outside [0, {len(self.action_nodes)})")
        if self._done:
            raise UsageError("step() after the episode finished; call reset()")
        events, _ = self.plant.call(self.action_nodes[action])
        self._absorb()
        self.steps += 1
        return StepResult(self.observation, reward_of(events, self.reward_config), self._done, events)


def make_env(
    n_products: int = 1,
    seed: int = 0,
    forced_colors: Optional[Sequence] = None,
    max_steps: Optional[int] = None,
    reward: Optional[RewardConfig] = None,
    plant=None,
) -> Environment:
    """Build an environment and reset it.  Without ``plant`` a local address space is created."""
    colors = tuple(Color(c) for c in forced_colors) if forced_colors else None
    factory = FactoryConfig(n_products, seed, colors, max_steps)
    if plant is None:
        plant = local_plant(factory)
    env = Environment(plant, factory, reward)
    env.reset()
    return env
