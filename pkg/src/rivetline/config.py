"""Run configuration: strict JSON parsing into typed sections.

Unknown keys, wrong types and out-of-range values are rejected with a
:class:`~rivetline.errors.ConfigError` whose ``path`` names the offending key
(``factory.nPorducts``, ``agent.hyperparams.alpha``, ...).
"""

from __future__ import annotations

import json
from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, ValidationInfo, field_validator

from rivetline.agents import PPOConfig, QConfig
from rivetline.env import RewardConfig
from rivetline.errors import ConfigError
from rivetline.factory import Color, FactoryConfig


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", strict=True, allow_inf_nan=False)


class FactorySection(_Strict):
    nProducts: int = Field(ge=1)
    seed: int = 0
    forcedColors: Optional[list[Literal["Blue", "Green"]]] = None
    maxSteps: Optional[int] = Field(default=None, ge=1)

    @field_validator("forcedColors")
    @classmethod
    def _colors_match(cls, colors, info: ValidationInfo):
        n = info.data.get("nProducts")
        if colors is not None and n is not None and len(colors) != n:
            raise ValueError(f"expected {n} colors (nProducts), got {len(colors)}")
        return colors


class RewardSection(_Strict):
    mode: Literal["R1", "R2"] = "R2"
    correctSort: float = 25.0
    completion: float = 100.0
    collision: float = -10.0
    incorrectSort: float = -50.0
    invalid: float = -5.0
    stepCost: float = Field(default=-1.0, le=0.0)


class QParams(_Strict):
    alpha: float = Field(default=0.1, gt=0.0, le=1.0)
    gamma: float = Field(default=0.99, ge=0.0, le=1.0)
    epsilonStart: float = Field(default=1.0, ge=0.0, le=1.0)
    epsilonEnd: float = Field(default=0.05, ge=0.0, le=1.0)
    epsilonDecaySteps: int = Field(default=50_000, ge=1)
    replayCapacity: int = Field(default=10_000, ge=1)
    batchSize: int = Field(default=32, ge=1)
    targetSyncInterval: int = Field(default=500, ge=1)

    def build(self) -> QConfig:
        return QConfig(self.alpha, self.gamma, self.epsilonStart, self.epsilonEnd, self.epsilonDecaySteps,
                       self.replayCapacity, self.batchSize, self.targetSyncInterval)


class PPOParams(_Strict):
    gamma: float = Field(default=0.99, ge=0.0, le=1.0)
    clipEpsilon: float = Field(default=0.2, gt=0.0)
    learningRate: float = Field(default=0.05, gt=0.0)
    valueCoeff: float = Field(default=0.5, ge=0.0)
    entropyCoeff: float = Field(default=0.01, ge=0.0)
    epochsPerBatch: int = Field(default=4, ge=1)
    rolloutLength: int = Field(default=512, ge=1)

    def build(self) -> PPOConfig:
        return PPOConfig(self.gamma, self.clipEpsilon, self.learningRate, self.valueCoeff, self.entropyCoeff,
                         self.epochsPerBatch, self.rolloutLength)


_PARAMS = {"qlearn": QParams, "ppo": PPOParams}


class AgentSection(_Strict):
    kind: Literal["qlearn", "ppo"]
    hyperparams: dict[str, Any] = Field(default_factory=dict)


class ScheduleSection(_Strict):
    episodes: int = Field(ge=1)
    totalSteps: Optional[int] = Field(default=None, ge=1)


class OutputSection(_Strict):
    metricsPath: str = "metrics.csv"
    episodeLogPath: Optional[str] = None
    policyPath: Optional[str] = "policy.json"


class RunConfig(_Strict):
    factory: FactorySection
    reward: RewardSection = Field(default_factory=RewardSection)
    agent: AgentSection
    schedule: ScheduleSection
    output: OutputSection = Field(default_factory=OutputSection)

    def factory_config(self) -> FactoryConfig:
        f = self.factory
        colors = tuple(Color(c) for c in f.forcedColors) if f.forcedColors else None
        return FactoryConfig(f.nProducts, f.seed, colors, f.maxSteps)

    def reward_config(self) -> RewardConfig:
        r = self.reward
        return RewardConfig(r.mode, r.correctSort, r.completion, r.collision, r.incorrectSort, r.invalid,
                            r.stepCost)

    def agent_params(self):
        return _PARAMS[self.agent.kind].model_validate(self.agent.hyperparams)

    def agent_config(self):
        return self.agent_params().build()

    def resolved(self) -> dict:
        """Plain-JSON form with every default filled in, hyperparameters included."""
        doc = self.model_dump(mode="json")
        doc["agent"]["hyperparams"] = self.agent_params().model_dump(mode="json")
        return doc


def _first_error(exc: ValidationError, prefix: tuple = ()) -> ConfigError:
    # a misspelled key also produces a "missing" error for the real name; report the typo
    errors = sorted(exc.errors(), key=lambda e: e["type"] != "extra_forbidden")
    err = errors[0]
    loc = prefix + tuple(str(p) for p in err["loc"])
    return ConfigError(err["msg"], ".".join(loc) or None)


def parse_config(text: str) -> RunConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("top level must be an object")
    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as exc:
        raise _first_error(exc) from None
    try:
        cfg.agent_params()
    except ValidationError as exc:
        raise _first_error(exc, ("agent", "hyperparams")) from None
    return cfg


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None


def config_from_dict(data: dict) -> RunConfig:
    return parse_config(json.dumps(data))
