"""Breadth-first planning oracle over the deterministic plant."""

from __future__ import annotations

import dataclasses
from collections import deque

from rivetline.errors import ConfigError, OracleError
from rivetline.factory import (
    Action,
    Collision,
    Completed,
    Delivered,
    FactoryConfig,
    FactoryState,
    InvalidAction,
    apply,
    init_state,
)

# lexicographic by actuator name, which is also the RL action-index order
ACTION_ORDER = tuple(sorted(Action, key=lambda a: a.value))


def _key(state: FactoryState):
    return state.cells, state.orientation, state.remaining, state.delivered


def _clean(events) -> bool:
    for ev in events:
        if isinstance(ev, (Collision, InvalidAction)):
            return False
        if isinstance(ev, Delivered) and not ev.correct:
            return False
    return True


def solve_optimal(config: FactoryConfig) -> list[Action]:
    """Shortest action sequence that delivers every product correctly.

    Only transitions free of collisions, invalid actions and wrong deliveries
    are explored, so the returned plan replays without any penalty event.
    Among shortest plans the lexicographically smallest (by action name) wins.
    """
    if config.forced_colors is None:
        raise ConfigError("the oracle needs fully specified colors", "forcedColors")
    # the search ignores the step budget
    config = dataclasses.replace(config, max_steps=2**62)
    start = init_state(config)
    parents: dict = {_key(start): None}
    frontier = deque([start])
    while frontier:
        state = frontier.popleft()
        for action in ACTION_ORDER:
            nxt, events = apply(state, action)
            if not _clean(events):
                continue
            key = _key(nxt)
            if key in parents:
                continue
            parents[key] = (_key(state), action)
            if any(isinstance(ev, Completed) for ev in events):
                return _unwind(parents, key)
            frontier.append(nxt)
    raise OracleError("no all-correct completion is reachable")


def _unwind(parents: dict, key) -> list[Action]:
    plan = []
    while parents[key] is not None:
        key, action = parents[key]
        plan.append(action)
    plan.reverse()
    return plan
