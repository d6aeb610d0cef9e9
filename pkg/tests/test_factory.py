import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rivetline.errors import ConfigError, UsageError
from rivetline.factory import (
    CHAINS, SENSOR_IDS, Action, Cell, Collision, Color, Completed, Delivered, Dispatched, FactoryConfig,
    InvalidAction, Moved, Product, RivetInstalled, Rotated, TableOrientation, apply, event_from_dict,
    event_to_dict, init_state, is_done, snapshot, state_index,
)

ACTIONS = list(Action)


def run(state, actions):
    log = []
    for a in actions:
        state, events = apply(state, a)
        log.append(events)
    return state, log


# --- init ---------------------------------------------------------------------


def test_init_empty_plant():
    s = init_state(FactoryConfig(1, seed=7))
    assert s.remaining == 1
    assert all(p is None for p in s.cells)
    assert s.orientation is TableOrientation.TOWARD_ASSEMBLY
    assert s.delivered == () and s.step_count == 0


def test_forced_colors_dispatch_in_order():
    s = init_state(FactoryConfig(2, forced_colors=(Color.BLUE, Color.GREEN)))
    s, ev1 = apply(s, Action.DISPATCH)
    s, _ = apply(s, Action.BELT1_ADVANCE)
    s, ev2 = apply(s, Action.DISPATCH)
    assert ev1 == [Dispatched(Color.BLUE)]
    assert ev2 == [Dispatched(Color.GREEN)]


def test_seeded_color_stream_repeats():
    cfg = FactoryConfig(50, seed=7)
    assert [cfg.color(i) for i in range(50)] == [FactoryConfig(50, seed=7).color(i) for i in range(50)]
    assert {cfg.color(i) for i in range(50)} == {Color.BLUE, Color.GREEN}


@pytest.mark.parametrize("kwargs,path", [
    (dict(n_products=0), "nProducts"),
    (dict(n_products=2, forced_colors=(Color.BLUE,)), "forcedColors"),
    (dict(n_products=1, max_steps=0), "maxSteps"),
])
def test_config_validation(kwargs, path):
    with pytest.raises(ConfigError) as err:
        FactoryConfig(**kwargs)
    assert err.value.path == path


def test_default_step_limit():
    assert FactoryConfig(3).step_limit == 600
    assert FactoryConfig(3, max_steps=10).step_limit == 10


# --- apply --------------------------------------------------------------------


def test_dispatch_places_fresh_product(blue_state):
    s, events = apply(blue_state, Action.DISPATCH)
    assert s[Cell.ENTRY] == Product(Color.BLUE, 0)
    assert events == [Dispatched(Color.BLUE)]
    assert s.remaining == 0


def test_dispatch_with_nothing_left_is_invalid(blue_state):
    s, _ = apply(blue_state, Action.DISPATCH)
    s, _ = apply(s, Action.BELT1_ADVANCE)
    s2, events = apply(s, Action.DISPATCH)
    assert events == [InvalidAction(Action.DISPATCH)]
    assert s2.cells == s.cells


def test_press_on_empty_assembly_is_invalid(blue_state):
    s, events = apply(blue_state, Action.ASSEMBLY_PRESS)
    assert events == [InvalidAction(Action.ASSEMBLY_PRESS)]
    assert s.cells == blue_state.cells and s.remaining == blue_state.remaining
    assert s.step_count == 1


def test_press_stops_at_two_rivets(blue_state):
    s = blue_state.with_cells(Assembly=Product(Color.BLUE, 1))
    s, events = apply(s, Action.ASSEMBLY_PRESS)
    assert events == [RivetInstalled(Cell.ASSEMBLY)]
    assert s[Cell.ASSEMBLY].rivets == 2
    _, events = apply(s, Action.ASSEMBLY_PRESS)
    assert events == [InvalidAction(Action.ASSEMBLY_PRESS)]


def test_belt1_blocked_by_table_and_chain():
    # Entry, Belt1 and Table all occupied: Belt1's carriage is blocked at the
    # table, and Entry's carriage is then blocked at Belt1 (hand-enumerated).
    cfg = FactoryConfig(3, forced_colors=(Color.BLUE,) * 3)
    s = init_state(cfg).with_cells(
        Entry=Product(Color.BLUE), Belt1=Product(Color.BLUE), Table=Product(Color.BLUE))
    s2, events = apply(s, Action.BELT1_ADVANCE)
    assert events == [Collision(Cell.TABLE), Collision(Cell.BELT1)]
    assert s2.cells == s.cells


def test_belt1_blocked_without_entry():
    cfg = FactoryConfig(2, forced_colors=(Color.BLUE,) * 2)
    s = init_state(cfg).with_cells(Belt1=Product(Color.BLUE), Table=Product(Color.GREEN))
    s2, events = apply(s, Action.BELT1_ADVANCE)
    assert events == [Collision(Cell.TABLE)]
    assert s2.cells == s.cells


def test_chain_moves_head_first():
    cfg = FactoryConfig(2, forced_colors=(Color.BLUE,) * 2)
    s = init_state(cfg).with_cells(Entry=Product(Color.GREEN), Belt1=Product(Color.BLUE))
    s2, events = apply(s, Action.BELT1_ADVANCE)
    assert events == [Moved(Cell.BELT1, Cell.TABLE), Moved(Cell.ENTRY, Cell.BELT1)]
    assert s2[Cell.TABLE] == Product(Color.BLUE) and s2[Cell.BELT1] == Product(Color.GREEN)


def test_belt4_from_table_toward_storage(blue_state):
    s = blue_state.with_cells(Table=Product(Color.GREEN, 2))
    s, _ = apply(s, Action.TABLE_ROTATE)
    s2, events = apply(s, Action.BELT4_ADVANCE)
    assert events == [Moved(Cell.TABLE, Cell.BELT4)]
    assert s2[Cell.BELT4] == Product(Color.GREEN, 2) and s2[Cell.TABLE] is None


def test_misaligned_table_is_a_collision(blue_state):
    s = blue_state.with_cells(Table=Product(Color.GREEN, 2))
    s2, events = apply(s, Action.BELT4_ADVANCE)
    assert events == [Collision(Cell.BELT4)]
    assert s2.cells == s.cells


def test_rotate_toggles(blue_state):
    s, ev = apply(blue_state, Action.TABLE_ROTATE)
    assert ev == [Rotated(TableOrientation.TOWARD_STORAGE)]
    s, ev = apply(s, Action.TABLE_ROTATE)
    assert ev == [Rotated(TableOrientation.TOWARD_ASSEMBLY)]


def test_incorrect_delivery_and_completion(blue_state):
    s = blue_state.with_cells(Belt3=Product(Color.BLUE, 1))
    s = type(s)(s.config, s.cells, s.orientation, 0, (), 0)
    s, events = apply(s, Action.BELT3_ADVANCE)
    assert events == [Delivered(Product(Color.BLUE, 1), Cell.EXIT, False), Completed(False)]
    assert is_done(s)


def test_apply_on_terminal_raises():
    s = init_state(FactoryConfig(1, max_steps=1))
    s, _ = apply(s, Action.TABLE_ROTATE)
    assert is_done(s)
    with pytest.raises(UsageError):
        apply(s, Action.TABLE_ROTATE)


def test_is_done_cases(blue_state):
    assert not is_done(blue_state)
    s = init_state(FactoryConfig(1, max_steps=2))
    s, _ = apply(s, Action.DISPATCH)
    s, _ = apply(s, Action.BELT1_ADVANCE)
    assert s.in_transit == 1 and is_done(s)


# --- snapshot -----------------------------------------------------------------


def test_snapshot_of_initial_state():
    snap = snapshot(init_state(FactoryConfig(1)))
    d = snap.as_dict()
    assert list(d) == list(SENSOR_IDS) == sorted(SENSOR_IDS)
    assert len(d) == 12
    assert d["Factory.Sensors.Entry.Remaining"] == 1
    assert sum(v for k, v in d.items() if k != "Factory.Sensors.Entry.Remaining") == 0


def test_snapshot_product_code(blue_state):
    snap = snapshot(blue_state.with_cells(Assembly=Product(Color.BLUE, 1)))
    assert snap.as_dict()["Factory.Sensors.Cell.Assembly"] == 2


@pytest.mark.parametrize("code", range(1, 7))
def test_product_code_round_trip(code):
    assert Product.from_code(code).code == code


def test_correct_green_delivery_counters():
    s = init_state(FactoryConfig(1, forced_colors=(Color.GREEN,))).with_cells(Belt4=Product(Color.GREEN, 2))
    s = type(s)(s.config, s.cells, TableOrientation.TOWARD_STORAGE, 0, (), 0)
    s, events = apply(s, Action.BELT4_ADVANCE)
    assert events[-1] == Completed(True)
    d = snapshot(s).as_dict()
    assert d["Factory.Sensors.Delivered.Storage"] == 1
    assert d["Factory.Sensors.Delivered.Correct"] == 1
    assert d["Factory.Sensors.Delivered.Exit"] == 0


def test_state_index_keys():
    s = init_state(FactoryConfig(1))
    assert state_index(snapshot(s)) == state_index(snapshot(init_state(FactoryConfig(1))))
    rotated, _ = apply(s, Action.TABLE_ROTATE)
    assert state_index(snapshot(rotated)) != state_index(snapshot(s))
    assert state_index(snapshot(s)) == "0,0,0,0,0,0,0,0,0,0,1,0"


def test_event_dict_round_trip():
    events = [
        Dispatched(Color.GREEN), Moved(Cell.TABLE, Cell.BELT4), Rotated(TableOrientation.TOWARD_STORAGE),
        RivetInstalled(Cell.ASSEMBLY), Collision(Cell.BELT1), InvalidAction(Action.DISPATCH),
        Delivered(Product(Color.BLUE, 2), Cell.EXIT, True), Completed(True),
    ]
    for e in events:
        assert event_from_dict(event_to_dict(e)) == e


# --- properties ---------------------------------------------------------------

scripts = st.lists(st.sampled_from(ACTIONS), max_size=120)


def _check_step(before, action, after, events):
    # conservation
    assert after.dispatched == after.in_transit + len(after.delivered)
    # collision safety: nothing moves into a cell occupied before the action,
    # unless its occupant left earlier in the same head-first pass
    vacated = {e.source for e in events if isinstance(e, Moved)}
    if any(isinstance(e, Delivered) for e in events):
        vacated.add(CHAINS[action][-2])
    for e in events:
        if isinstance(e, Moved):
            assert before[e.target] is None or e.target in vacated
    # monotone rivets, following each carriage
    moved = {e.source: e.target for e in events if isinstance(e, Moved)}
    delivered = [e.product for e in events if isinstance(e, Delivered)]
    for cell, product in before.occupancy.items():
        if product is None:
            continue
        if delivered and cell is CHAINS[action][-2]:
            assert delivered[0].color is product.color and delivered[0].rivets == product.rivets
            continue
        now = after[moved.get(cell, cell)]
        assert now.color is product.color
        assert product.rivets <= now.rivets <= 2


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 3), scripts)
def test_invariants_hold_along_any_script(seed, n, script):
    s = init_state(FactoryConfig(n, seed=seed))
    for a in script:
        if is_done(s):
            break
        s2, events = apply(s, a)
        assert events, "every action emits at least one event"
        _check_step(s, a, s2, events)
        s = s2


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32), scripts)
def test_replay_is_deterministic(seed, script):
    cfg = FactoryConfig(2, seed=seed, max_steps=10_000)
    a = run(init_state(cfg), script)
    b = run(init_state(FactoryConfig(2, seed=seed, max_steps=10_000)), script)
    assert a == b


def test_random_fuzz_smoke():
    rng = random.Random(5)
    for _ in range(50):
        s = init_state(FactoryConfig(rng.randint(1, 4), seed=rng.getrandbits(32)))
        while not is_done(s):
            a = rng.choice(ACTIONS)
            s2, events = apply(s, a)
            _check_step(s, a, s2, events)
            s = s2
