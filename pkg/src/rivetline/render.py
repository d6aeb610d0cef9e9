"""Fixed-width text diagram of the plant, built from an observation vector."""

from __future__ import annotations

from typing import Sequence

from rivetline.factory import SENSOR_IDS

_INDEX = {ident: i for i, ident in enumerate(SENSOR_IDS)}


def _cell(obs: Sequence[int], name: str) -> str:
    code = obs[_INDEX[f"Factory.Sensors.Cell.{name}"]]
    if code == 0:
        return "[  ]"
    return f"[{'B' if code <= 3 else 'G'}{(code - 1) % 3}]"


def render(obs: Sequence[int]) -> str:
    """Three-line diagram; products show as color letter plus rivet count (``B2``)."""
    get = lambda ident: obs[_INDEX[ident]]  # noqa: E731
    row1 = " ".join(f"{name:<6}" for name in ("Entry", "Belt1", "Table", "Belt2", "Assy", "Belt3")) + " Exit"
    row2 = " ".join(f"{_cell(obs, n):<6}" for n in ("Entry", "Belt1", "Table", "Belt2", "Assembly", "Belt3"))
    row2 += f" {get('Factory.Sensors.Delivered.Exit'):>4}"
    table = "Belt2" if get("Factory.Sensors.Table.Orientation") == 0 else "Belt4"
    row3 = (f"{'':14}Belt4 {_cell(obs, 'Belt4')} -> Storage {get('Factory.Sensors.Delivered.Storage'):>3}"
            f"   table->{table}  remaining {get('Factory.Sensors.Entry.Remaining')}"
            f"  correct {get('Factory.Sensors.Delivered.Correct')}")
    return "\n".join((row1, row2, row3))
