"""Discrete model of the riveting/sorting plant.

Layout::

    Entry -> Belt1 -> Table -> Belt2 <-> Assembly -> Belt3 -> Exit
                        |
                        +----> Belt4 -> Storage

Every transit cell holds at most one carriage (carriage and product are one
unit).  Exit and Storage are sinks.  The rotary table aligns with either the
Belt1/Belt2 axis or with Belt4.  A belt action advances every carriage on its
chain by one cell, starting from the head of the chain, so a carriage can move
into a cell vacated during the same action.

States are immutable; :func:`apply` returns a new state and the emitted events.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

from rivetline.errors import ConfigError, UsageError
from rivetline.rng import coin

STEPS_PER_PRODUCT = 200


class Color(Enum):
    BLUE = "Blue"
    GREEN = "Green"


class Cell(Enum):
    ENTRY = "Entry"
    BELT1 = "Belt1"
    TABLE = "Table"
    BELT2 = "Belt2"
    ASSEMBLY = "Assembly"
    BELT3 = "Belt3"
    EXIT = "Exit"
    BELT4 = "Belt4"
    STORAGE = "Storage"


TRANSIT_CELLS = (
    Cell.ENTRY,
    Cell.BELT1,
    Cell.TABLE,
    Cell.BELT2,
    Cell.ASSEMBLY,
    Cell.BELT3,
    Cell.BELT4,
)
SINK_CELLS = (Cell.EXIT, Cell.STORAGE)
_SLOT = {cell: i for i, cell in enumerate(TRANSIT_CELLS)}


class TableOrientation(Enum):
    TOWARD_ASSEMBLY = 0
    TOWARD_STORAGE = 1

    def toggled(self) -> TableOrientation:
        if self is TableOrientation.TOWARD_ASSEMBLY:
            return TableOrientation.TOWARD_STORAGE
        return TableOrientation.TOWARD_ASSEMBLY


class Action(Enum):
    DISPATCH = "Dispatch"
    BELT1_ADVANCE = "Belt1Advance"
    TABLE_ROTATE = "TableRotate"
    BELT2_FORWARD = "Belt2Forward"
    BELT2_BACKWARD = "Belt2Backward"
    ASSEMBLY_PRESS = "AssemblyPress"
    BELT3_ADVANCE = "Belt3Advance"
    BELT4_ADVANCE = "Belt4Advance"


# chain of cells each belt action moves along, tail first
CHAINS = {
    Action.BELT1_ADVANCE: (Cell.ENTRY, Cell.BELT1, Cell.TABLE),
    Action.BELT2_FORWARD: (Cell.TABLE, Cell.BELT2, Cell.ASSEMBLY),
    Action.BELT2_BACKWARD: (Cell.ASSEMBLY, Cell.BELT2, Cell.TABLE),
    Action.BELT3_ADVANCE: (Cell.ASSEMBLY, Cell.BELT3, Cell.EXIT),
    Action.BELT4_ADVANCE: (Cell.TABLE, Cell.BELT4, Cell.STORAGE),
}

# orientation a transfer touching the table needs, keyed by the far end
_TABLE_ALIGNMENT = {
    Cell.BELT1: TableOrientation.TOWARD_ASSEMBLY,
    Cell.BELT2: TableOrientation.TOWARD_ASSEMBLY,
    Cell.BELT4: TableOrientation.TOWARD_STORAGE,
}

_SORT_TARGET = {Color.BLUE: Cell.EXIT, Color.GREEN: Cell.STORAGE}


@dataclass(frozen=True, slots=True)
class Product:
    color: Color
    rivets: int = 0

    @property
    def code(self) -> int:
        """Sensor code: 1..3 for Blue with 0..2 rivets, 4..6 for Green."""
        return (1 if self.color is Color.BLUE else 4) + self.rivets

    @classmethod
    def from_code(cls, code: int) -> Product:
        if not 1 <= code <= 6:
            raise ValueError(f"not a product code: {code}")
        color = Color.BLUE if code <= 3 else Color.GREEN
        return cls(color, (code - 1) % 3)


def is_correct_delivery(product: Product, dest: Cell) -> bool:
    return product.rivets == 2 and _SORT_TARGET[product.color] is dest


# --- events -----------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Dispatched:
    color: Color


@dataclass(frozen=True, slots=True)
class Moved:
    source: Cell
    target: Cell


@dataclass(frozen=True, slots=True)
class Rotated:
    orientation: TableOrientation


@dataclass(frozen=True, slots=True)
class RivetInstalled:
    cell: Cell


@dataclass(frozen=True, slots=True)
class Collision:
    blocked_at: Cell


@dataclass(frozen=True, slots=True)
class InvalidAction:
    action: Action


@dataclass(frozen=True, slots=True)
class Delivered:
    product: Product
    dest: Cell
    correct: bool


@dataclass(frozen=True, slots=True)
class Completed:
    all_correct: bool


Event = Union[Dispatched, Moved, Rotated, RivetInstalled, Collision, InvalidAction, Delivered, Completed]


def event_to_dict(event: Event) -> dict:
    """Plain-JSON form of an event; ``kind`` is the event's symbolic name."""
    if isinstance(event, Moved):
        return {"kind": "Moved", "from": event.source.value, "to": event.target.value}
    if isinstance(event, Dispatched):
        return {"kind": "Dispatched", "color": event.color.value}
    if isinstance(event, Rotated):
        return {"kind": "Rotated", "orientation": event.orientation.value}
    if isinstance(event, RivetInstalled):
        return {"kind": "RivetInstalled", "cell": event.cell.value}
    if isinstance(event, Collision):
        return {"kind": "Collision", "blockedAt": event.blocked_at.value}
    if isinstance(event, InvalidAction):
        return {"kind": "InvalidAction", "action": event.action.value}
    if isinstance(event, Delivered):
        return {
            "kind": "Delivered",
            "color": event.product.color.value,
            "rivets": event.product.rivets,
            "dest": event.dest.value,
            "correct": event.correct,
        }
    if isinstance(event, Completed):
        return {"kind": "Completed", "allCorrect": event.all_correct}
    raise TypeError(f"not an event: {event!r}")


def event_from_dict(data: dict) -> Event:
    kind = data["kind"]
    if kind == "Moved":
        return Moved(Cell(data["from"]), Cell(data["to"]))
    if kind == "Dispatched":
        return Dispatched(Color(data["color"]))
    if kind == "Rotated":
        return Rotated(TableOrientation(data["orientation"]))
    if kind == "RivetInstalled":
        return RivetInstalled(Cell(data["cell"]))
    if kind == "Collision":
        return Collision(Cell(data["blockedAt"]))
    if kind == "InvalidAction":
        return InvalidAction(Action(data["action"]))
    if kind == "Delivered":
        product = Product(Color(data["color"]), int(data["rivets"]))
        return Delivered(product, Cell(data["dest"]), bool(data["correct"]))
    if kind == "Completed":
        return Completed(bool(data["allCorrect"]))
    raise ValueError(f"unknown event kind: {kind!r}")


# --- state ------------------------------------------------------------------


@dataclass(frozen=True)
class FactoryConfig:
    n_products: int
    seed: int = 0
    forced_colors: Optional[tuple[Color, ...]] = None
    max_steps: Optional[int] = None

    def __post_init__(self):
        if not isinstance(self.n_products, int) or self.n_products < 1:
            raise ConfigError("must be a positive integer", "nProducts")
        if self.forced_colors is not None:
            colors = tuple(Color(c) if not isinstance(c, Color) else c for c in self.forced_colors)
            if len(colors) != self.n_products:
                raise ConfigError(
                    f"length {len(colors)} does not match nProducts={self.n_products}", "forcedColors"
                )
            object.__setattr__(self, "forced_colors", colors)
        if self.max_steps is not None and self.max_steps < 1:
            raise ConfigError("must be a positive integer", "maxSteps")

    @property
    def step_limit(self) -> int:
        if self.max_steps is not None:
            return self.max_steps
        return STEPS_PER_PRODUCT * self.n_products

    def color(self, index: int) -> Color:
        """Color of the ``index``-th dispatched product."""
        if self.forced_colors is not None:
            return self.forced_colors[index]
        return Color.GREEN if coin(self.seed, index) else Color.BLUE


@dataclass(frozen=True, slots=True)
class Delivery:
    product: Product
    dest: Cell
    correct: bool


@dataclass(frozen=True)
class FactoryState:
    """Full plant configuration.

    ``cells`` is indexed like :data:`TRANSIT_CELLS`.  The color stream is
    counter based: the next dispatch draws ``config.color(dispatched)``, so the
    state needs no mutable generator.
    """

    config: FactoryConfig
    cells: tuple[Optional[Product], ...]
    orientation: TableOrientation
    remaining: int
    delivered: tuple[Delivery, ...]
    step_count: int

    def __getitem__(self, cell: Cell) -> Optional[Product]:
        return self.cells[_SLOT[cell]]

    @property
    def occupancy(self) -> dict[Cell, Optional[Product]]:
        return dict(zip(TRANSIT_CELLS, self.cells))

    @property
    def dispatched(self) -> int:
        return self.config.n_products - self.remaining

    @property
    def in_transit(self) -> int:
        return sum(p is not None for p in self.cells)

    @property
    def completed(self) -> bool:
        return len(self.delivered) == self.config.n_products

    def with_cells(self, **placed: Optional[Product]) -> FactoryState:
        """Copy with cells overwritten, keyed by cell value (``Table=Product(...)``).

        Intended for building test scenarios; it does not touch ``remaining``.
        """
        cells = list(self.cells)
        for name, product in placed.items():
            cells[_SLOT[Cell(name)]] = product
        return FactoryState(self.config, tuple(cells), self.orientation, self.remaining,
                            self.delivered, self.step_count)


def init_state(config: FactoryConfig) -> FactoryState:
    return FactoryState(
        config=config,
        cells=(None,) * len(TRANSIT_CELLS),
        orientation=TableOrientation.TOWARD_ASSEMBLY,
        remaining=config.n_products,
        delivered=(),
        step_count=0,
    )


def is_done(state: FactoryState) -> bool:
    return state.completed or state.step_count >= state.config.step_limit


def _aligned(orientation: TableOrientation, source: Cell, target: Cell) -> bool:
    if source is Cell.TABLE:
        return _TABLE_ALIGNMENT[target] is orientation
    if target is Cell.TABLE:
        return _TABLE_ALIGNMENT[source] is orientation
    return True


def apply(state: FactoryState, action: Action) -> tuple[FactoryState, list[Event]]:
    """Advance the plant by one actuator action.

    Raises :class:`UsageError` if the state is already terminal.
    """
    if is_done(state):
        raise UsageError("apply() on a terminal factory state")
    action = Action(action)
    cells = list(state.cells)
    orientation = state.orientation
    remaining = state.remaining
    delivered = state.delivered
    events: list[Event] = []

    if action is Action.DISPATCH:
        if cells[0] is None and remaining > 0:
            color = state.config.color(state.dispatched)
            cells[0] = Product(color, 0)
            remaining -= 1
            events.append(Dispatched(color))
    elif action is Action.TABLE_ROTATE:
        orientation = orientation.toggled()
        events.append(Rotated(orientation))
    elif action is Action.ASSEMBLY_PRESS:
        slot = _SLOT[Cell.ASSEMBLY]
        product = cells[slot]
        if product is not None and product.rivets < 2:
            cells[slot] = Product(product.color, product.rivets + 1)
            events.append(RivetInstalled(Cell.ASSEMBLY))
    else:
        chain = CHAINS[action]
        new_deliveries = []
        for i in range(len(chain) - 2, -1, -1):
            source, target = chain[i], chain[i + 1]
            src = _SLOT[source]
            product = cells[src]
            if product is None:
                continue
            if not _aligned(orientation, source, target):
                events.append(Collision(target))
            elif target in SINK_CELLS:
                cells[src] = None
                correct = is_correct_delivery(product, target)
                new_deliveries.append(Delivery(product, target, correct))
                events.append(Delivered(product, target, correct))
            elif cells[_SLOT[target]] is not None:
                events.append(Collision(target))
            else:
                cells[_SLOT[target]] = product
                cells[src] = None
                events.append(Moved(source, target))
        if new_deliveries:
            delivered = delivered + tuple(new_deliveries)
            if len(delivered) == state.config.n_products:
                events.append(Completed(all(d.correct for d in delivered)))

    if not events:
        events.append(InvalidAction(action))
        cells = state.cells
    new_state = FactoryState(
        config=state.config,
        cells=tuple(cells),
        orientation=orientation,
        remaining=remaining,
        delivered=delivered,
        step_count=state.step_count + 1,
    )
    return new_state, events


# --- sensors ----------------------------------------------------------------

# sensor node identifiers in lexicographic order; SensorSnapshot.values() follows it
SENSOR_IDS = (
    "Factory.Sensors.Cell.Assembly",
    "Factory.Sensors.Cell.Belt1",
    "Factory.Sensors.Cell.Belt2",
    "Factory.Sensors.Cell.Belt3",
    "Factory.Sensors.Cell.Belt4",
    "Factory.Sensors.Cell.Entry",
    "Factory.Sensors.Cell.Table",
    "Factory.Sensors.Delivered.Correct",
    "Factory.Sensors.Delivered.Exit",
    "Factory.Sensors.Delivered.Storage",
    "Factory.Sensors.Entry.Remaining",
    "Factory.Sensors.Table.Orientation",
)
assert list(SENSOR_IDS) == sorted(SENSOR_IDS)


@dataclass(frozen=True, slots=True)
class SensorSnapshot:
    """Integer sensor readings.  ``cell_content`` follows :data:`TRANSIT_CELLS`; 0 means empty."""

    cell_content: tuple[int, ...]
    orientation: int
    remaining: int
    delivered_exit: int
    delivered_storage: int
    delivered_correct: int

    def cell(self, cell: Cell) -> int:
        return self.cell_content[_SLOT[cell]]

    def values(self) -> tuple[int, ...]:
        """Readings ordered like :data:`SENSOR_IDS`."""
        c = self.cell_content
        return (
            c[4], c[1], c[3], c[5], c[6], c[0], c[2],
            self.delivered_correct,
            self.delivered_exit,
            self.delivered_storage,
            self.remaining,
            self.orientation,
        )

    def as_dict(self) -> dict[str, int]:
        return dict(zip(SENSOR_IDS, self.values()))


def snapshot(state: FactoryState) -> SensorSnapshot:
    exit_count = storage_count = correct = 0
    for d in state.delivered:
        if d.dest is Cell.EXIT:
            exit_count += 1
        else:
            storage_count += 1
        correct += d.correct
    return SensorSnapshot(
        cell_content=tuple(0 if p is None else p.code for p in state.cells),
        orientation=state.orientation.value,
        remaining=state.remaining,
        delivered_exit=exit_count,
        delivered_storage=storage_count,
        delivered_correct=correct,
    )


def state_index(snap: SensorSnapshot) -> str:
    """Canonical key of a snapshot: comma-joined readings in sensor-id order."""
    return ",".join(map(str, snap.values()))
