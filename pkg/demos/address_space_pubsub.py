"""
Sensors, actuators and change notifications
===========================================

The address space wraps the plant in nodes.  Sensors are read-only
variables, actuators are methods, and a subscription receives one
notification per changed sensor after every call.
"""

from rivetline.factory import FactoryConfig
from rivetline.infomodel import local_plant

space = local_plant(FactoryConfig(n_products=2, seed=7))

for node in space.browse("Factory"):
    print(node.id, node.node_class.value)
print([str(n.id) for n in space.browse("Factory.Actuators")])

# Watch everything the RL mapper would see.
sub = space.subscribe(space.rl_variables())

events, _ = space.call("Factory.Actuators.Dispatch")
print("events:", events)
for note in sub.drain():
    print(f"  #{note.sequence} tick {note.tick}: {note.node_id} = {note.new_value}")

# A call that changes nothing is silent.
events, notes = space.call("Factory.Actuators.AssemblyPress")
print("press on empty assembly:", events, "notifications:", notes)

# Notifications queue until drained; sequence numbers keep counting.
for _ in range(3):
    space.call("Factory.Actuators.TableRotate")
print([(n.sequence, n.new_value) for n in sub.drain()])

# Sensors cannot be written from outside.
try:
    space.write("Factory.Sensors.Cell.Table", 3)
except Exception as exc:  # UaError
    print("write refused:", exc)
