"""Address space mirroring the plant: sensor variables, actuator methods, subscriptions.

Sensors are read-only variable nodes whose values are re-read from the plant
after every method call; each change is pushed synchronously to every
subscription monitoring the node.  Nodes the RL mapper may use carry the
``RL_VARIABLE`` / ``RL_METHOD`` type tags.

Besides the RL-facing nodes the space exposes two plain nodes used by the
environment plumbing: ``Factory.Status.Done`` (0/1) and the
``Factory.Control.Reset`` method, which restarts the plant, optionally with a
new seed or product configuration.
"""

from __future__ import annotations

import dataclasses
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

from rivetline.errors import ConfigError, StatusCode, UaError
from rivetline.factory import (
    SENSOR_IDS,
    Action,
    Event,
    FactoryConfig,
    FactoryState,
    apply,
    init_state,
    is_done,
    snapshot,
)

NAMESPACE = 1
ACTUATOR_PREFIX = "Factory.Actuators."
RESET_ID = "Factory.Control.Reset"
DONE_ID = "Factory.Status.Done"


@dataclass(frozen=True, order=True)
class NodeId:
    namespace_index: int
    identifier: str

    def __str__(self) -> str:
        return self.identifier if self.namespace_index == NAMESPACE else f"ns={self.namespace_index};s={self.identifier}"

    @classmethod
    def parse(cls, text: Union[str, NodeId]) -> NodeId:
        if isinstance(text, NodeId):
            return text
        if text.startswith("ns="):
            ns, _, ident = text[3:].partition(";s=")
            return cls(int(ns), ident)
        return cls(NAMESPACE, text)


class NodeClass(Enum):
    OBJECT = "Object"
    VARIABLE = "Variable"
    METHOD = "Method"


class TypeTag(Enum):
    PLAIN = "Plain"
    RL_VARIABLE = "RLVariable"
    RL_METHOD = "RLMethod"


@dataclass
class Node:
    id: NodeId
    node_class: NodeClass
    parent: Optional[NodeId] = None
    type_tag: TypeTag = TypeTag.PLAIN
    value: Optional[int] = None
    binding: Optional[Action] = None


@dataclass(frozen=True, slots=True)
class Notification:
    sequence: int
    node_id: str
    new_value: int
    tick: int
    subscription_id: int = 0


@dataclass
class Subscription:
    id: int
    monitored: frozenset
    queue: deque = field(default_factory=deque)
    next_sequence: int = 1

    def drain(self) -> list[Notification]:
        """Return and clear queued notifications, oldest first."""
        items = list(self.queue)
        self.queue.clear()
        return items

    def _push(self, node_id: NodeId, value: int, tick: int) -> Notification:
        note = Notification(self.next_sequence, node_id.identifier, value, tick, self.id)
        self.next_sequence += 1
        self.queue.append(note)
        return note


NodeRef = Union[str, NodeId]


class AddressSpace:
    """Nodes mirroring one :class:`FactoryState`.  Not thread-safe; callers serialize access."""

    def __init__(self, state: FactoryState):
        self.state = state
        self.nodes: dict[NodeId, Node] = {}
        self.children: dict[NodeId, list[NodeId]] = {}
        self.subscriptions: dict[int, Subscription] = {}
        self._next_subscription = 1
        self._variables: list[NodeId] = []

        for ident in SENSOR_IDS:
            self._add(ident, NodeClass.VARIABLE, TypeTag.RL_VARIABLE, value=0)
        self._add(DONE_ID, NodeClass.VARIABLE, value=0)
        for action in Action:
            self._add(ACTUATOR_PREFIX + action.value, NodeClass.METHOD, TypeTag.RL_METHOD, binding=action)
        self._add(RESET_ID, NodeClass.METHOD)
        for kids in self.children.values():
            kids.sort()
        self._variables.sort()
        self._values = self._current_values()
        for nid, value in zip(self._variables, self._values):
            self.nodes[nid].value = value

    def _add(self, ident: str, node_class: NodeClass, tag: TypeTag = TypeTag.PLAIN, **attrs) -> None:
        nid = NodeId(NAMESPACE, ident)
        parts = ident.split(".")
        parent = None
        for depth in range(1, len(parts)):
            obj = NodeId(NAMESPACE, ".".join(parts[:depth]))
            if obj not in self.nodes:
                self.nodes[obj] = Node(obj, NodeClass.OBJECT, parent)
                self.children[obj] = []
                if parent is not None:
                    self.children[parent].append(obj)
            parent = obj
        self.nodes[nid] = Node(nid, node_class, parent, tag, **attrs)
        self.children[parent].append(nid)
        if node_class is NodeClass.VARIABLE:
            self._variables.append(nid)

    def _current_values(self) -> list[int]:
        # DONE_ID sorts after every sensor id, so it is the last variable
        return [*snapshot(self.state).values(), int(is_done(self.state))]

    def _node(self, ref: NodeRef) -> Node:
        try:
            return self.nodes[NodeId.parse(ref)]
        except (KeyError, ValueError):
            raise UaError(StatusCode.BadNodeIdUnknown, str(ref)) from None

    # --- services -----------------------------------------------------------

    def browse(self, ref: NodeRef = "Factory") -> list[Node]:
        """Child nodes of ``ref`` in NodeId order."""
        node = self._node(ref)
        return [self.nodes[c] for c in self.children.get(node.id, ())]

    def node(self, ref: NodeRef) -> Node:
        return self._node(ref)

    def read(self, ref: NodeRef) -> int:
        node = self._node(ref)
        if node.node_class is not NodeClass.VARIABLE:
            raise UaError(StatusCode.BadNodeClass, f"{node.id} is not a variable")
        return node.value

    def write(self, ref: NodeRef, value: int) -> None:
        node = self._node(ref)
        if node.node_class is NodeClass.VARIABLE:
            raise UaError(StatusCode.BadNotWritable, f"{node.id} is owned by the plant")
        raise UaError(StatusCode.BadNodeClass, f"{node.id} is not a variable")

    def call(self, ref: NodeRef, args: Optional[dict] = None) -> tuple[list[Event], list[Notification]]:
        """Invoke a method node; returns the plant events and every notification emitted."""
        node = self._node(ref)
        if node.node_class is not NodeClass.METHOD:
            raise UaError(StatusCode.BadNodeClass, f"{node.id} is not a method")
        if node.binding is None:
            self.reset(**(args or {}))
            return [], self._publish()
        if is_done(self.state):
            raise UaError(StatusCode.BadPrecondition, "the episode is finished")
        self.state, events = apply(self.state, node.binding)
        return events, self._publish()

    def reset(self, seed: Optional[int] = None, nProducts: Optional[int] = None,
              forcedColors: Optional[list] = None, maxSteps: Optional[int] = None) -> None:
        """Restart the plant; omitted arguments keep the current configuration."""
        changes = {}
        if seed is not None:
            changes["seed"] = seed
        if nProducts is not None:
            changes["n_products"] = nProducts
            if forcedColors is None:
                changes["forced_colors"] = None
        if forcedColors is not None:
            changes["forced_colors"] = tuple(forcedColors) if forcedColors else None
        if maxSteps is not None:
            changes["max_steps"] = maxSteps
        try:
            config = dataclasses.replace(self.state.config, **changes)
        except (ConfigError, ValueError, TypeError) as exc:
            raise UaError(StatusCode.BadPrecondition, str(exc)) from None
        self.state = init_state(config)

    def subscribe(self, refs) -> Subscription:
        ids = []
        for ref in refs:
            node = self._node(ref)
            if node.node_class is not NodeClass.VARIABLE:
                raise UaError(StatusCode.BadNodeClass, f"{node.id} is not a variable")
            ids.append(node.id)
        sub = Subscription(self._next_subscription, frozenset(ids))
        self._next_subscription += 1
        self.subscriptions[sub.id] = sub
        return sub

    def unsubscribe(self, subscription_id: int) -> None:
        self.subscriptions.pop(subscription_id, None)

    def _publish(self) -> list[Notification]:
        values = self._current_values()
        tick = self.state.step_count
        emitted = []
        for nid, old, new in zip(self._variables, self._values, values):
            if old == new:
                continue
            self.nodes[nid].value = new
            for sub in self.subscriptions.values():
                if nid in sub.monitored:
                    emitted.append(sub._push(nid, new, tick))
        self._values = values
        return emitted

    # --- RL mapper helpers ----------------------------------------------------

    def rl_variables(self) -> list[NodeId]:
        return sorted(n.id for n in self.nodes.values() if n.type_tag is TypeTag.RL_VARIABLE)

    def rl_methods(self) -> list[NodeId]:
        return sorted(n.id for n in self.nodes.values() if n.type_tag is TypeTag.RL_METHOD)


def build_address_space(state: FactoryState) -> AddressSpace:
    return AddressSpace(state)


def local_plant(config: FactoryConfig) -> AddressSpace:
    return AddressSpace(init_state(config))
