"""Tabular PPO: softmax policy over per-state logits, a state-value baseline, clipped surrogate loss.

Gradients are analytic.  For a sample with state s, action a and
``rho = pi(a|s) / pi_old(a|s)``, the surrogate ``rho * A`` has gradient
``rho * A * (onehot(a) - pi(.|s))`` with respect to the logits of s; the
clipped branch contributes nothing once rho leaves ``[1 - eps, 1 + eps]``.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


@dataclass(frozen=True)
class PPOConfig:
    gamma: float = 0.99
    clip_epsilon: float = 0.2
    learning_rate: float = 0.05
    value_coeff: float = 0.5
    entropy_coeff: float = 0.01
    epochs_per_batch: int = 4
    rollout_length: int = 512


@dataclass
class Batch:
    states: list[str]
    actions: np.ndarray
    old_log_probs: np.ndarray
    rewards: np.ndarray
    dones: np.ndarray
    values: np.ndarray
    returns: Optional[np.ndarray] = None
    advantages: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.states)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def ppo_advantages(batch: Batch, gamma: float) -> Batch:
    """Fill ``returns`` (discounted, cut at episode ends) and normalized ``advantages``."""
    n = len(batch)
    returns = np.zeros(n)
    running = 0.0
    for t in range(n - 1, -1, -1):
        if batch.dones[t]:
            running = 0.0
        running = batch.rewards[t] + gamma * running
        returns[t] = running
    adv = returns - batch.values
    if n > 1 and adv.var() >= 1e-12:
        adv = (adv - adv.mean()) / adv.std()
    batch.returns = returns
    batch.advantages = adv
    return batch


@dataclass
class LossResult:
    loss: float
    policy_loss: float
    value_loss: float
    entropy_loss: float
    grad_logits: dict[str, np.ndarray]
    grad_values: dict[str, float]


@dataclass
class PPOAgent:
    n_actions: int = 8
    config: PPOConfig = field(default_factory=PPOConfig)
    logits: dict[str, np.ndarray] = field(default_factory=dict)
    value_table: dict[str, float] = field(default_factory=dict)

    def row(self, s: str) -> np.ndarray:
        row = self.logits.get(s)
        if row is None:
            row = self.logits[s] = np.zeros(self.n_actions)
        return row

    def policy(self, s: str) -> np.ndarray:
        row = self.logits.get(s)
        if row is None:
            return np.full(self.n_actions, 1.0 / self.n_actions)
        return np.exp(log_softmax(row))

    def greedy(self, s: str) -> int:
        row = self.logits.get(s)
        return 0 if row is None else int(np.argmax(row))

    def sample(self, s: str, rng: random.Random) -> tuple[int, float]:
        """Draw an action from the current policy; returns it with its log-probability."""
        logp = log_softmax(self.row(s))
        u = rng.random()
        acc = 0.0
        a = self.n_actions - 1
        for i in range(self.n_actions):
            acc += math.exp(logp[i])
            if u < acc:
                a = i
                break
        return a, float(logp[a])

    def collect(self, env, rollout_length: int, rng: random.Random,
                reset: Optional[Callable[[], object]] = None,
                on_step: Optional[Callable] = None) -> Batch:
        """Run the current policy for ``rollout_length`` steps, resetting at episode ends.

        ``reset`` replaces ``env.reset`` (e.g. to reseed each episode); ``on_step``
        is called as ``on_step(action, result)`` after every step.
        """
        reset = reset or env.reset
        states, actions, logps, rewards, dones, values = [], [], [], [], [], []
        for _ in range(rollout_length):
            if env.done:
                reset()
            s = env.state_key()
            a, logp = self.sample(s, rng)
            result = env.step(a)
            states.append(s)
            actions.append(a)
            logps.append(logp)
            rewards.append(result.reward)
            dones.append(result.done)
            values.append(self.value_table.get(s, 0.0))
            if on_step is not None:
                on_step(a, result)
        return Batch(states, np.array(actions, dtype=int), np.array(logps), np.array(rewards, dtype=float),
                     np.array(dones, dtype=bool), np.array(values))

    def _tables(self, batch: Batch):
        keys = list(dict.fromkeys(batch.states))
        index = {k: i for i, k in enumerate(keys)}
        idx = np.array([index[s] for s in batch.states], dtype=int)
        logits = np.array([self.logits.get(k, np.zeros(self.n_actions)) for k in keys], dtype=float)
        values = np.array([self.value_table.get(k, 0.0) for k in keys], dtype=float)
        return keys, idx, logits, values

    def loss(self, batch: Batch) -> LossResult:
        """Clipped-surrogate loss with value and entropy terms, plus its analytic gradient."""
        if len(batch) == 0:
            raise ValueError("empty batch")
        if batch.advantages is None:
            ppo_advantages(batch, self.config.gamma)
        keys, idx, logits, values = self._tables(batch)
        loss, policy_loss, value_loss, entropy_loss, g_logits, g_values = _loss_and_grad(
            logits, values, idx, batch.actions, batch.old_log_probs, batch.advantages, batch.returns,
            self.config.clip_epsilon, self.config.value_coeff, self.config.entropy_coeff,
        )
        return LossResult(
            loss, policy_loss, value_loss, entropy_loss,
            {k: g_logits[i] for i, k in enumerate(keys)},
            {k: float(g_values[i]) for i, k in enumerate(keys)},
        )

    def update(self, batch: Batch) -> None:
        """``epochs_per_batch`` full-batch gradient steps; old log-probs stay fixed."""
        if batch.advantages is None:
            ppo_advantages(batch, self.config.gamma)
        lr = self.config.learning_rate
        keys, idx, logits, values = self._tables(batch)
        for _ in range(self.config.epochs_per_batch):
            *_, g_logits, g_values = _loss_and_grad(
                logits, values, idx, batch.actions, batch.old_log_probs, batch.advantages, batch.returns,
                self.config.clip_epsilon, self.config.value_coeff, self.config.entropy_coeff,
            )
            logits -= lr * g_logits
            values -= lr * g_values
        for i, k in enumerate(keys):
            self.logits[k] = logits[i].copy()
            self.value_table[k] = float(values[i])

    def mean_entropy(self, states) -> float:
        if not states:
            return 0.0
        total = 0.0
        for s in states:
            p = self.policy(s)
            total += float(-(p * np.log(p)).sum())
        return total / len(states)

    def table(self) -> dict[str, list[float]]:
        return {k: list(map(float, v)) for k, v in self.logits.items()}


def _loss_and_grad(logits, values, idx, actions, old_logp, adv, returns, clip_eps, value_coeff, entropy_coeff):
    n = len(idx)
    rows = np.arange(n)
    logp = log_softmax(logits[idx])
    p = np.exp(logp)
    ratio = np.exp(logp[rows, actions] - old_logp)
    unclipped = ratio * adv
    clipped = np.clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps) * adv
    policy_loss = -np.minimum(unclipped, clipped).mean()

    v = values[idx]
    value_loss = value_coeff * ((v - returns) ** 2).mean()

    entropy = -(p * logp).sum(axis=1)
    entropy_loss = -entropy_coeff * entropy.mean()

    # gradient of the surrogate is live only where the unclipped branch is the minimum
    coef = np.where(unclipped <= clipped, unclipped, 0.0)
    onehot = np.zeros_like(p)
    onehot[rows, actions] = 1.0
    g = -(coef[:, None] / n) * (onehot - p)
    g += (entropy_coeff / n) * p * (logp + entropy[:, None])
    g_logits = np.zeros_like(logits)
    np.add.at(g_logits, idx, g)

    g_values = np.zeros_like(values)
    np.add.at(g_values, idx, 2.0 * value_coeff * (v - returns) / n)

    loss = policy_loss + value_loss + entropy_loss
    return float(loss), float(policy_loss), float(value_loss), float(entropy_loss), g_logits, g_values
