"""
Walking a product through the plant
===================================

The plant is a pure state machine: ``apply(state, action)`` returns a new
state and the events the action caused.  Here one Green product is riveted
and sorted to storage by hand, then the planning oracle confirms the route.
"""

from rivetline.factory import Action, Color, FactoryConfig, apply, event_to_dict, init_state, snapshot
from rivetline.oracle import solve_optimal
from rivetline.render import render

config = FactoryConfig(n_products=1, forced_colors=(Color.GREEN,))
state = init_state(config)
print(render(tuple(snapshot(state).values())))

# Green products need two rivets and must end up in Storage, which means a
# trip to the press and back before the table turns toward Belt4.
route = [
    Action.DISPATCH, Action.BELT1_ADVANCE, Action.BELT1_ADVANCE,
    Action.BELT2_FORWARD, Action.BELT2_FORWARD,
    Action.ASSEMBLY_PRESS, Action.ASSEMBLY_PRESS,
    Action.BELT2_BACKWARD, Action.BELT2_BACKWARD,
    Action.TABLE_ROTATE, Action.BELT4_ADVANCE, Action.BELT4_ADVANCE,
]
for action in route:
    state, events = apply(state, action)
    print(f"\n{action.value}: {[event_to_dict(e) for e in events]}")
    print(render(tuple(snapshot(state).values())))

# Mistakes are events too.  Pushing from an empty Entry does nothing useful
# and is reported as an invalid action rather than raised.
fresh = init_state(config)
_, events = apply(fresh, Action.BELT1_ADVANCE)
print("\non an empty plant:", [event_to_dict(e) for e in events])

# The breadth-first oracle finds the same 12 steps.
plan = solve_optimal(config)
print("\noracle:", [a.value for a in plan])
assert plan == route
