import random
import socket
import threading

import pytest

from rivetline.client import TransportError, connect
from rivetline.errors import StatusCode, UaError
from rivetline.factory import Action, Color, Dispatched, FactoryConfig, event_to_dict, snapshot
from rivetline.infomodel import ACTUATOR_PREFIX, DONE_ID, NodeClass, TypeTag, local_plant
from rivetline.protocol import HEADER, MAX_PAYLOAD, FrameDecoder, Kind, Message, encode_frame
from rivetline.server import PlantServer

ACT = {a: ACTUATOR_PREFIX + a.value for a in Action}


@pytest.fixture
def server():
    with PlantServer(local_plant(FactoryConfig(2, seed=5))) as srv:
        yield srv


def _raw_exchange(address, payload: bytes) -> list[Message]:
    with socket.create_connection(address, timeout=5) as sock:
        sock.sendall(payload)
        dec = FrameDecoder()
        out = []
        while True:
            data = sock.recv(65536)
            if not data:
                return out
            out.extend(dec.feed(data))


def test_read_before_hello_is_rejected(server):
    replies = _raw_exchange(server.address, encode_frame(Message(Kind.READ, 1, {"nodeId": DONE_ID})))
    assert [(m.kind, m.body["code"]) for m in replies] == [(Kind.ERROR, StatusCode.BadMessage)]


def test_wrong_version_is_rejected(server):
    replies = _raw_exchange(server.address, encode_frame(Message(Kind.HELLO, 1, {"version": 99})))
    assert replies[0].kind is Kind.ERROR


def test_oversized_frame_closes_connection(server):
    hello = encode_frame(Message(Kind.HELLO, 1, {"version": 1}))
    replies = _raw_exchange(server.address, hello + HEADER.pack(MAX_PAYLOAD + 1))
    assert replies[0].kind is Kind.OK
    assert (replies[1].kind, replies[1].body["code"]) == (Kind.ERROR, StatusCode.FrameTooLarge)


def test_response_kind_from_client_is_rejected(server):
    hello = encode_frame(Message(Kind.HELLO, 1, {"version": 1}))
    replies = _raw_exchange(server.address, hello + encode_frame(Message(Kind.NOTIFY, None, {})))
    assert replies[-1].kind is Kind.ERROR


def test_browse_read_and_errors(server):
    with connect(*server.address) as c:
        children = c.browse("Factory.Actuators")
        assert [n.id.identifier for n in children] == sorted(ACT.values())
        assert {(n.node_class, n.type_tag) for n in children} == {(NodeClass.METHOD, TypeTag.RL_METHOD)}
        assert c.read("Factory.Sensors.Entry.Remaining") == 2
        with pytest.raises(UaError) as err:
            c.read("Factory.Nope")
        assert err.value.code is StatusCode.BadNodeIdUnknown
        with pytest.raises(UaError) as err:
            c.call("Factory.Sensors.Cell.Entry")
        assert err.value.code is StatusCode.BadNodeClass
        # the session survives service errors
        assert c.read(DONE_ID) == 0


def test_call_returns_events_then_notifications(server):
    with connect(*server.address) as c:
        sub = c.subscribe([str(n) for n in server.space.rl_variables()])
        events, notes = c.call(ACT[Action.DISPATCH])
        assert events == [Dispatched(server.space.state.config.color(0))]
        assert [n.node_id for n in notes] == ["Factory.Sensors.Cell.Entry", "Factory.Sensors.Entry.Remaining"]
        assert sub.drain() == notes


def test_fan_out_to_other_client(server):
    with connect(*server.address) as watcher, connect(*server.address) as actor:
        watcher.subscribe(["Factory.Sensors.Table.Orientation"])
        actor.call(ACT[Action.TABLE_ROTATE])
        note = watcher.next_notification(timeout=5)
        assert (note.node_id, note.new_value, note.sequence) == ("Factory.Sensors.Table.Orientation", 1, 1)
        with pytest.raises(TransportError):
            watcher.next_notification(timeout=0.05)


def test_concurrent_calls_are_linearizable():
    space = local_plant(FactoryConfig(60, seed=21, max_steps=10_000))
    with PlantServer(space) as srv:
        clients = [connect(*srv.address) for _ in range(4)]
        subs = [c.subscribe([str(n) for n in space.rl_variables()]) for c in clients]
        results = [[] for _ in clients]

        def worker(i):
            rng = random.Random(i)
            for _ in range(100):
                events, _ = clients[i].call(ACT[rng.choice(list(Action))])
                results[i].append([event_to_dict(e) for e in events])

        threads = [threading.Thread(target=worker, args=(i,)) for i in range(4)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        # every client saw every notification exactly once and in order
        for c, sub in zip(clients, subs):
            seqs = [n.sequence for n in sub.drain()]
            assert seqs == list(range(1, len(seqs) + 1))
        for c in clients:
            c.close()
        history = list(srv.history)

    assert len(history) == 400
    replica = local_plant(FactoryConfig(60, seed=21, max_steps=10_000))
    for node_id, args, encoded in history:
        events, _ = replica.call(node_id, args)
        assert [event_to_dict(e) for e in events] == encoded
    assert replica.state == space.state
    observed = sorted(map(repr, (e for r in results for e in r)))
    assert observed == sorted(repr(e) for _, _, e in history)


def test_remote_matches_local_for_a_script():
    rng = random.Random(8)
    script = [rng.choice(list(Action)) for _ in range(300)]
    cfg = FactoryConfig(40, seed=77, max_steps=10_000)
    local = local_plant(cfg)
    local_sub = local.subscribe(local.rl_variables())
    with PlantServer(local_plant(cfg)) as srv, connect(*srv.address) as c:
        remote_sub = c.subscribe([str(n) for n in srv.space.rl_variables()])
        for a in script:
            assert c.call(ACT[a]) == local.call(ACT[a])
        assert remote_sub.drain() == local_sub.drain()
        remote_final = {str(n): c.read(n) for n in srv.space.rl_variables()}
    assert remote_final == snapshot(local.state).as_dict()


def test_reset_over_the_wire(server):
    with connect(*server.address) as c:
        c.call(ACT[Action.DISPATCH])
        c.call("Factory.Control.Reset", {"nProducts": 1, "forcedColors": ["Green"]})
        assert c.read("Factory.Sensors.Entry.Remaining") == 1
        assert server.space.state.config.forced_colors == (Color.GREEN,)
        with pytest.raises(UaError) as err:
            c.call("Factory.Control.Reset", {"bogus": 1})
        assert err.value.code is StatusCode.BadMessage


def test_client_sees_server_shutdown():
    srv = PlantServer(local_plant(FactoryConfig(1))).start()
    c = connect(*srv.address, timeout=2)
    srv.stop()
    with pytest.raises(TransportError):
        for _ in range(3):
            c.read(DONE_ID)
    c.close()


def test_connect_refused():
    sock = socket.socket()
    sock.bind(("127.0.0.1", 0))
    port = sock.getsockname()[1]
    sock.close()
    with pytest.raises(OSError):
        connect("127.0.0.1", port, timeout=1)
