"""TCP server exposing an :class:`AddressSpace` to remote clients.

One handler thread per connection.  A single lock guards the address space,
and a call's reply plus all the notifications it causes are written while the
lock is held, so no other request is processed before every subscriber has
its notifications.
"""

from __future__ import annotations

import logging
import socket
import socketserver
import threading
from typing import Optional

from rivetline.errors import StatusCode, UaError
from rivetline.factory import event_to_dict
from rivetline.infomodel import AddressSpace
from rivetline.protocol import (
    PROTOCOL_VERSION,
    REQUEST_KINDS,
    FrameDecoder,
    Kind,
    Message,
    ProtocolError,
    encode_frame,
    error_message,
)

log = logging.getLogger(__name__)


class _Session:
    def __init__(self, sock: socket.socket):
        self.sock = sock
        self.send_lock = threading.Lock()
        self.subscriptions: set[int] = set()
        self.alive = True

    def send(self, message: Message) -> None:
        data = encode_frame(message)
        with self.send_lock:
            try:
                self.sock.sendall(data)
            except OSError:
                self.alive = False


class _Handler(socketserver.BaseRequestHandler):
    server: _TCPServer

    def handle(self):
        plant: PlantServer = self.server.plant
        self.request.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        session = _Session(self.request)
        plant._register(session)
        decoder = FrameDecoder()
        greeted = False
        try:
            while session.alive:
                try:
                    data = self.request.recv(65536)
                except OSError:
                    break
                if not data:
                    break
                decoder.push(data)
                while session.alive:
                    try:
                        message = decoder.next_message()
                    except ProtocolError as exc:
                        session.send(error_message(None, exc.code, str(exc)))
                        return
                    if message is None:
                        break
                    if not greeted:
                        if message.kind is not Kind.HELLO or message.body.get("version") != PROTOCOL_VERSION:
                            session.send(error_message(message.request_id, StatusCode.BadMessage,
                                                       f"expected Hello version {PROTOCOL_VERSION}"))
                            return
                        greeted = True
                        session.send(Message(Kind.OK, message.request_id, {"version": PROTOCOL_VERSION}))
                        continue
                    if message.kind not in REQUEST_KINDS or message.request_id is None:
                        session.send(error_message(message.request_id, StatusCode.BadMessage,
                                                   f"unexpected {message.kind.value} from client"))
                        return
                    plant._dispatch(session, message)
        finally:
            plant._unregister(session)


class _TCPServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True
    plant: PlantServer


class PlantServer:
    """Serve ``space`` on ``(host, port)``; port 0 picks a free port."""

    def __init__(self, space: AddressSpace, host: str = "127.0.0.1", port: int = 0):
        self.space = space
        self.lock = threading.Lock()
        self.history: list[tuple[str, Optional[dict], list[dict]]] = []
        self._sessions: list[_Session] = []
        self._tcp = _TCPServer((host, port), _Handler)
        self._tcp.plant = self
        self._thread: Optional[threading.Thread] = None

    @property
    def address(self) -> tuple[str, int]:
        return self._tcp.server_address[:2]

    def start(self) -> PlantServer:
        self._thread = threading.Thread(target=self._tcp.serve_forever, name="plant-server", daemon=True)
        self._thread.start()
        return self

    def serve_forever(self) -> None:
        self._tcp.serve_forever()

    def stop(self) -> None:
        self._tcp.shutdown()
        self._tcp.server_close()
        with self.lock:
            sessions = list(self._sessions)
        for session in sessions:
            try:
                session.sock.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
        if self._thread is not None:
            self._thread.join()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()

    def _register(self, session: _Session) -> None:
        with self.lock:
            self._sessions.append(session)

    def _unregister(self, session: _Session) -> None:
        with self.lock:
            if session in self._sessions:
                self._sessions.remove(session)
            for sub_id in session.subscriptions:
                self.space.unsubscribe(sub_id)

    def _dispatch(self, session: _Session, message: Message) -> None:
        rid = message.request_id
        body = message.body
        with self.lock:
            try:
                if message.kind is Kind.HELLO:
                    session.send(Message(Kind.OK, rid, {"version": PROTOCOL_VERSION}))
                elif message.kind is Kind.BROWSE:
                    children = self.space.browse(_node_arg(body))
                    session.send(Message(Kind.OK, rid, {"children": [
                        {"nodeId": str(c.id), "nodeClass": c.node_class.value, "typeTag": c.type_tag.value}
                        for c in children]}))
                elif message.kind is Kind.READ:
                    session.send(Message(Kind.VALUE, rid, {"value": self.space.read(_node_arg(body))}))
                elif message.kind is Kind.SUBSCRIBE:
                    ids = body.get("nodeIds", [])
                    if not isinstance(ids, list) or not all(isinstance(i, str) for i in ids):
                        raise UaError(StatusCode.BadMessage, "nodeIds must be a list of strings")
                    sub = self.space.subscribe(ids)
                    session.subscriptions.add(sub.id)
                    session.send(Message(Kind.OK, rid, {"subscriptionId": sub.id}))
                elif message.kind is Kind.CALL:
                    self._call(session, rid, body)
            except UaError as exc:
                session.send(error_message(rid, exc.code, exc.message))

    def _call(self, session: _Session, rid: int, body: dict) -> None:
        node_id = _node_arg(body)
        args = body.get("args")
        if args is not None and not isinstance(args, dict):
            raise UaError(StatusCode.BadMessage, "args must be an object")
        try:
            events, notes = self.space.call(node_id, args)
        except TypeError as exc:
            raise UaError(StatusCode.BadMessage, str(exc)) from None
        encoded = [event_to_dict(e) for e in events]
        self.history.append((node_id, args, encoded))
        per_session = {id(s): [] for s in self._sessions}
        owner = {sub_id: s for s in self._sessions for sub_id in s.subscriptions}
        for note in notes:
            target = owner.get(note.subscription_id)
            if target is not None:
                per_session[id(target)].append(note)
        mine = per_session.get(id(session), [])
        session.send(Message(Kind.EVENTS, rid, {"events": encoded, "notifyCount": len(mine)}))
        for target in self._sessions:
            for note in per_session[id(target)]:
                target.send(Message(Kind.NOTIFY, None, {
                    "subscriptionId": note.subscription_id,
                    "sequence": note.sequence,
                    "nodeId": note.node_id,
                    "value": note.new_value,
                    "tick": note.tick,
                }))


def _node_arg(body: dict) -> str:
    node_id = body.get("nodeId")
    if not isinstance(node_id, str):
        raise UaError(StatusCode.BadMessage, "nodeId must be a string")
    return node_id


def serve(space: AddressSpace, host: str = "127.0.0.1", port: int = 0) -> PlantServer:
    """Start a server in a background thread and return its handle."""
    server = PlantServer(space, host, port).start()
    log.info("serving plant on %s:%d", *server.address)
    return server
