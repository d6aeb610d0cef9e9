"""
Driving a plant over TCP
========================

A ``PlantServer`` exposes the address space through length-prefixed JSON
frames.  ``connect`` returns a session with the same ``browse``/``read``/
``call``/``subscribe`` methods, so the environment runs on it unchanged.
"""

import random

from rivetline.client import connect
from rivetline.env import make_env
from rivetline.factory import FactoryConfig
from rivetline.infomodel import local_plant
from rivetline.server import PlantServer

config = FactoryConfig(n_products=2, seed=3)

with PlantServer(local_plant(config)) as server, connect(*server.address) as session:
    print("server on %s:%d" % server.address)
    remote_env = make_env(n_products=2, seed=3, plant=session)
    local_env = make_env(n_products=2, seed=3)

    rng = random.Random(0)
    while not local_env.done:
        action = rng.randrange(local_env.action_count)
        a = local_env.step(action)
        b = remote_env.step(action)
        assert (a.observation, a.reward, a.events) == (b.observation, b.reward, b.events)
    print(f"{local_env.steps} identical steps, final observation {remote_env.observation}")

    # a second client sees the first one's changes as notifications
    with connect(*server.address) as watcher:
        watcher.subscribe(["Factory.Sensors.Entry.Remaining"])
        remote_env.reset()
        note = watcher.next_notification(timeout=5)
        print("watcher saw", note.node_id, "=", note.new_value)
