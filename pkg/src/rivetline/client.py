"""Blocking client for :mod:`rivetline.server`.

:class:`ClientSession` mirrors the :class:`~rivetline.infomodel.AddressSpace`
service methods (``browse``, ``read``, ``call``, ``subscribe``) so code written
against a local address space runs unchanged against a remote plant.
"""

from __future__ import annotations

import socket
import threading
from collections import deque
from typing import Optional

from rivetline.errors import StatusCode, UaError
from rivetline.factory import Event, event_from_dict
from rivetline.infomodel import Node, NodeClass, NodeId, Notification, TypeTag
from rivetline.protocol import (
    PROTOCOL_VERSION,
    FrameDecoder,
    Kind,
    Message,
    ProtocolError,
    encode_frame,
)


class TransportError(ConnectionError):
    """Timeout or loss of the connection to the plant server."""


class RemoteSubscription:
    def __init__(self, session: ClientSession, subscription_id: int, monitored):
        self.session = session
        self.id = subscription_id
        self.monitored = frozenset(monitored)

    def drain(self) -> list[Notification]:
        return self.session._take(self.id)


class _Pending:
    __slots__ = ("done", "reply", "notes", "expected")

    def __init__(self):
        self.done = threading.Event()
        self.reply: Optional[Message] = None
        self.notes: list[Notification] = []
        self.expected = 0


class ClientSession:
    def __init__(self, host: str, port: int, timeout: float = 10.0):
        self.timeout = timeout
        self._sock = socket.create_connection((host, port), timeout=timeout)
        self._sock.settimeout(None)
        self._sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self._send_lock = threading.Lock()
        self._cond = threading.Condition()
        self._pending: dict[int, _Pending] = {}
        self._collecting: deque[_Pending] = deque()
        self._notes: deque[Notification] = deque()
        self._next_id = 1
        self._closed: Optional[str] = None
        self._reader = threading.Thread(target=self._read_loop, name="plant-client", daemon=True)
        self._reader.start()
        self._request(Kind.HELLO, {"version": PROTOCOL_VERSION})

    # --- plumbing -------------------------------------------------------------

    def _read_loop(self) -> None:
        decoder = FrameDecoder()
        reason = "connection closed by server"
        try:
            while True:
                data = self._sock.recv(65536)
                if not data:
                    break
                decoder.push(data)
                while (message := decoder.next_message()) is not None:
                    self._route(message)
        except (OSError, ProtocolError) as exc:
            reason = f"connection lost: {exc}"
        with self._cond:
            self._closed = self._closed or reason
            for pending in self._pending.values():
                pending.done.set()
            self._cond.notify_all()

    def _route(self, message: Message) -> None:
        with self._cond:
            if message.kind is Kind.NOTIFY:
                b = message.body
                note = Notification(b["sequence"], b["nodeId"], b["value"], b["tick"], b["subscriptionId"])
                self._notes.append(note)
                if self._collecting:
                    pending = self._collecting[0]
                    pending.notes.append(note)
                    if len(pending.notes) == pending.expected:
                        self._collecting.popleft()
                        pending.done.set()
                self._cond.notify_all()
                return
            pending = self._pending.get(message.request_id)
            if pending is None:
                if message.kind is Kind.ERROR:
                    self._closed = f"server error: {message.body.get('message')}"
                return
            pending.reply = message
            pending.expected = message.body.get("notifyCount", 0) if message.kind is Kind.EVENTS else 0
            if pending.expected:
                self._collecting.append(pending)
            else:
                pending.done.set()

    def _request(self, kind: Kind, body: dict) -> tuple[Message, list[Notification]]:
        with self._cond:
            if self._closed:
                raise TransportError(self._closed)
            rid = self._next_id
            self._next_id += 1
            pending = self._pending[rid] = _Pending()
        try:
            with self._send_lock:
                self._sock.sendall(encode_frame(Message(kind, rid, body)))
            if not pending.done.wait(self.timeout):
                raise TransportError(f"no reply to {kind.value} within {self.timeout}s")
        except OSError as exc:
            raise TransportError(str(exc)) from exc
        finally:
            with self._cond:
                self._pending.pop(rid, None)
        reply = pending.reply
        if reply is None or (pending.expected and len(pending.notes) < pending.expected):
            raise TransportError(self._closed or "incomplete reply")
        if reply.kind is Kind.ERROR:
            code = StatusCode(reply.body.get("code", StatusCode.BadMessage))
            raise UaError(code, reply.body.get("message", ""))
        return reply, pending.notes

    def _take(self, subscription_id: int) -> list[Notification]:
        with self._cond:
            mine = [n for n in self._notes if n.subscription_id == subscription_id]
            if mine:
                self._notes = deque(n for n in self._notes if n.subscription_id != subscription_id)
            return mine

    # --- services -------------------------------------------------------------

    def browse(self, ref="Factory") -> list[Node]:
        """Child nodes of ``ref``; values and method bindings are not transferred."""
        reply, _ = self._request(Kind.BROWSE, {"nodeId": str(ref)})
        parent = NodeId.parse(str(ref))
        return [Node(NodeId.parse(c["nodeId"]), NodeClass(c["nodeClass"]), parent, TypeTag(c["typeTag"]))
                for c in reply.body["children"]]

    def read(self, ref) -> int:
        reply, _ = self._request(Kind.READ, {"nodeId": str(ref)})
        return reply.body["value"]

    def call(self, ref, args: Optional[dict] = None) -> tuple[list[Event], list[Notification]]:
        body = {"nodeId": str(ref)}
        if args is not None:
            body["args"] = args
        reply, notes = self._request(Kind.CALL, body)
        return [event_from_dict(e) for e in reply.body["events"]], list(notes)

    def subscribe(self, refs) -> RemoteSubscription:
        ids = [str(r) for r in refs]
        reply, _ = self._request(Kind.SUBSCRIBE, {"nodeIds": ids})
        return RemoteSubscription(self, reply.body["subscriptionId"], ids)

    def next_notification(self, timeout: Optional[float] = None) -> Notification:
        """Oldest undelivered notification; raises :class:`TransportError` on timeout."""
        with self._cond:
            if not self._cond.wait_for(lambda: self._notes or self._closed, timeout):
                raise TransportError("no notification before timeout")
            if not self._notes:
                raise TransportError(self._closed)
            return self._notes.popleft()

    def close(self) -> None:
        with self._cond:
            self._closed = self._closed or "closed by client"
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()
        self._reader.join(timeout=self.timeout)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def connect(host: str, port: int, timeout: float = 10.0) -> ClientSession:
    return ClientSession(host, port, timeout)
