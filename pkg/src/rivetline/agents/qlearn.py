"""Tabular Q-learning with the two DQN ingredients: experience replay and a frozen target table."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence


@dataclass(frozen=True)
class QConfig:
    alpha: float = 0.1
    gamma: float = 0.99
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_steps: int = 50_000
    replay_capacity: int = 10_000
    batch_size: int = 32
    target_sync_interval: int = 500


class Transition(NamedTuple):
    s: str
    a: int
    r: float
    s_next: str
    done: bool


class ReplayBuffer:
    """Fixed-capacity ring buffer with uniform sampling."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self._items: list[Transition] = []
        self._pos = 0

    def __len__(self) -> int:
        return len(self._items)

    def push(self, transition: Transition) -> None:
        if len(self._items) < self.capacity:
            self._items.append(transition)
        else:
            self._items[self._pos] = transition
        self._pos = (self._pos + 1) % self.capacity

    def sample(self, k: int, rng: random.Random) -> list[Transition]:
        return rng.choices(self._items, k=k)


def argmax(values: Sequence[float]) -> int:
    """Index of the largest value; ties go to the lowest index."""
    best, best_i = values[0], 0
    for i in range(1, len(values)):
        if values[i] > best:
            best, best_i = values[i], i
    return best_i


@dataclass
class QAgent:
    n_actions: int = 8
    config: QConfig = field(default_factory=QConfig)
    q_table: dict[str, list[float]] = field(default_factory=dict)
    target_table: dict[str, list[float]] = field(default_factory=dict)
    update_count: int = 0
    env_steps: int = 0
    replay: Optional[ReplayBuffer] = None

    def __post_init__(self):
        if self.replay is None:
            self.replay = ReplayBuffer(self.config.replay_capacity)

    @property
    def epsilon(self) -> float:
        c = self.config
        frac = min(1.0, self.env_steps / c.epsilon_decay_steps) if c.epsilon_decay_steps > 0 else 1.0
        return c.epsilon_start + frac * (c.epsilon_end - c.epsilon_start)

    def values(self, s: str) -> list[float]:
        row = self.q_table.get(s)
        if row is None:
            row = self.q_table[s] = [0.0] * self.n_actions
        return row

    def greedy(self, s: str) -> int:
        row = self.q_table.get(s)
        return 0 if row is None else argmax(row)

    def act(self, s: str, rng: random.Random, epsilon: Optional[float] = None) -> int:
        """Epsilon-greedy action; ``epsilon`` defaults to the current schedule value."""
        eps = self.epsilon if epsilon is None else epsilon
        if eps > 0 and rng.random() < eps:
            return rng.randrange(self.n_actions)
        return self.greedy(s)

    def update(self, batch: Sequence[Transition]) -> None:
        """One replay update: move each sampled Q(s, a) toward its target-table TD target."""
        alpha, gamma = self.config.alpha, self.config.gamma
        target = self.target_table
        for s, a, r, s_next, done in batch:
            row = self.values(s)
            bootstrap = 0.0
            if not done:
                t_row = target.get(s_next)
                if t_row is not None:
                    bootstrap = gamma * max(t_row)
            row[a] += alpha * (r + bootstrap - row[a])
        self.update_count += 1
        if self.update_count % self.config.target_sync_interval == 0:
            self.sync_target()

    def sync_target(self) -> None:
        self.target_table = {s: list(row) for s, row in self.q_table.items()}

    def observe(self, transition: Transition, rng: random.Random) -> None:
        """Store a transition and, once the buffer holds a batch, run one update."""
        self.replay.push(transition)
        self.env_steps += 1
        if len(self.replay) >= self.config.batch_size:
            self.update(self.replay.sample(self.config.batch_size, rng))

    def table(self) -> dict[str, list[float]]:
        return self.q_table
