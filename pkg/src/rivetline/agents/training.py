"""Training and evaluation loops, and the policy file format."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from rivetline.agents.ppo import PPOAgent, PPOConfig, ppo_advantages
from rivetline.agents.qlearn import QAgent, QConfig, Transition, argmax
from rivetline.env import Environment, StepResult
from rivetline.factory import Completed
from rivetline.rng import derive_seed

POLICY_FORMAT = "rivetline-policy"
POLICY_VERSION = 1

# sub-seeds drawn from the master seed, one per source of randomness
_ENV_STREAM, _AGENT_STREAM = 0, 1


@dataclass(frozen=True)
class EpisodeRecord:
    episode: int
    ret: float
    steps: int
    completed: bool
    all_correct: bool
    exploration: float


class TrainLog(list):
    """Append-only list of :class:`EpisodeRecord`, one per finished episode."""


class _Episodes:
    """Starts seeded episodes on an environment and summarizes each one as it ends."""

    def __init__(self, env: Environment, seed: int, logger=None):
        self.env = env
        self.seed = derive_seed(seed, _ENV_STREAM)
        self.logger = logger
        self.count = 0
        self._ret = 0.0
        self._completed = self._all_correct = False

    def start(self):
        self._ret = 0.0
        self._completed = self._all_correct = False
        seed = derive_seed(self.seed, self.count)
        if self.logger is not None:
            self.logger.episode(self.count, seed)
        return self.env.reset(seed=seed)

    def record(self, action: int, result: StepResult, exploration: Callable[[], float]) -> Optional[EpisodeRecord]:
        if self.logger is not None:
            self.logger.step(action, result, self.env.steps)
        self._ret += result.reward
        for ev in result.events:
            if isinstance(ev, Completed):
                self._completed = True
                self._all_correct = ev.all_correct
        if not result.done:
            return None
        rec = EpisodeRecord(self.count, self._ret, self.env.steps, self._completed, self._all_correct,
                            exploration())
        self.count += 1
        return rec


AgentConfig = Union[QConfig, PPOConfig]


def train(
    kind: str,
    env: Environment,
    episodes: int,
    seed: int = 0,
    config: Optional[AgentConfig] = None,
    on_episode: Optional[Callable[[EpisodeRecord], None]] = None,
    total_steps: Optional[int] = None,
    episode_log=None,
):
    """Train a ``"qlearn"`` or ``"ppo"`` agent; returns ``(agent, TrainLog)``.

    Episode ``i`` is reset with ``derive_seed(derive_seed(seed, 0), i)`` and
    the agent's own randomness comes from ``derive_seed(seed, 1)``, so a
    (seed, config) pair fixes the whole run.  ``episode_log`` (an
    :class:`~rivetline.logs.EpisodeLogWriter`) receives every step.  Training stops after
    ``episodes`` episodes or ``total_steps`` environment steps, whichever is
    first; PPO finishes the rollout batch in progress.
    """
    rng = random.Random(derive_seed(seed, _AGENT_STREAM))
    tracker = _Episodes(env, seed, episode_log)
    log = TrainLog()
    n_actions = env.action_count

    def emit(rec: Optional[EpisodeRecord]) -> None:
        if rec is not None:
            log.append(rec)
            if on_episode is not None:
                on_episode(rec)

    steps = 0
    if kind == "qlearn":
        agent = QAgent(n_actions, config or QConfig())
        while len(log) < episodes and (total_steps is None or steps < total_steps):
            tracker.start()
            s = env.state_key()
            while not env.done:
                a = agent.act(s, rng)
                result = env.step(a)
                s_next = env.state_key()
                agent.observe(Transition(s, a, result.reward, s_next, result.done), rng)
                s = s_next
                steps += 1
                emit(tracker.record(a, result, lambda: agent.epsilon))
        return agent, log

    if kind == "ppo":
        agent = PPOAgent(n_actions, config or PPOConfig())
        visited: list[str] = []

        def on_step(action: int, result: StepResult) -> None:
            visited.append(env.state_key())
            rec = tracker.record(action, result, lambda: agent.mean_entropy(visited))
            if rec is not None:
                visited.clear()
            emit(rec)

        tracker.start()
        while len(log) < episodes and (total_steps is None or steps < total_steps):
            batch = agent.collect(env, agent.config.rollout_length, rng, reset=tracker.start, on_step=on_step)
            steps += len(batch)
            agent.update(ppo_advantages(batch, agent.config.gamma))
        return agent, log

    raise ValueError(f"unknown agent kind {kind!r}")


# --- evaluation ---------------------------------------------------------------


@dataclass(frozen=True)
class EvalStats:
    mean_return: float
    completion_rate: float
    all_correct_rate: float
    mean_steps: float

    def as_dict(self) -> dict:
        return {
            "meanReturn": self.mean_return,
            "completionRate": self.completion_rate,
            "allCorrectRate": self.all_correct_rate,
            "meanSteps": self.mean_steps,
        }


def run_episode(policy: Callable[[str], int], env: Environment, seed: Optional[int] = None) -> list[StepResult]:
    env.reset(seed=seed)
    trajectory = []
    while not env.done:
        trajectory.append(env.step(policy(env.state_key())))
    return trajectory


def evaluate(policy: Callable[[str], int], env: Environment, n_episodes: int, seed: int = 0) -> EvalStats:
    """Run ``policy`` for ``n_episodes``; episode ``i`` is reset with ``derive_seed(seed, i)``."""
    returns, steps, completed, correct = [], [], 0, 0
    for i in range(n_episodes):
        trajectory = run_episode(policy, env, derive_seed(seed, i))
        returns.append(sum(r.reward for r in trajectory))
        steps.append(len(trajectory))
        final = [ev for ev in trajectory[-1].events if isinstance(ev, Completed)] if trajectory else []
        if final:
            completed += 1
            correct += final[0].all_correct
    n = max(n_episodes, 1)
    return EvalStats(float(np.mean(returns)) if returns else 0.0, completed / n, correct / n,
                     float(np.mean(steps)) if steps else 0.0)


def random_policy(n_actions: int, seed: int = 0) -> Callable[[str], int]:
    rng = random.Random(seed)
    return lambda _s: rng.randrange(n_actions)


class GreedyPolicy:
    """Argmax over a table of per-state scores (Q-values or logits); unknown states pick action 0."""

    def __init__(self, table: dict[str, list[float]], kind: str = "qlearn", config: Optional[dict] = None,
                 values: Optional[dict[str, float]] = None):
        self.table = table
        self.kind = kind
        self.config = config
        self.values = values

    def __call__(self, s: str) -> int:
        row = self.table.get(s)
        return 0 if row is None else argmax(row)

    @classmethod
    def from_agent(cls, agent: Union[QAgent, PPOAgent], config: Optional[dict] = None) -> GreedyPolicy:
        if isinstance(agent, QAgent):
            return cls(agent.table(), "qlearn", config)
        return cls(agent.table(), "ppo", config, dict(agent.value_table))


def policy_to_text(policy: GreedyPolicy) -> str:
    doc = {"format": POLICY_FORMAT, "version": POLICY_VERSION, "kind": policy.kind, "table": policy.table}
    if policy.values is not None:
        doc["values"] = policy.values
    if policy.config is not None:
        doc["config"] = policy.config
    return json.dumps(doc, sort_keys=True, indent=1, allow_nan=False) + "\n"


def save_policy(policy: GreedyPolicy, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(policy_to_text(policy))


def load_policy(path) -> GreedyPolicy:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != POLICY_FORMAT or doc.get("version") != POLICY_VERSION:
        raise ValueError(f"{path}: not a {POLICY_FORMAT} v{POLICY_VERSION} file")
    return GreedyPolicy(doc["table"], doc.get("kind", "qlearn"), doc.get("config"), doc.get("values"))
