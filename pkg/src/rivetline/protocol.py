"""Length-prefixed JSON framing.

A frame is a 4-byte big-endian payload length followed by a UTF-8 JSON
object with sorted keys and compact separators, so equal messages always
encode to equal bytes.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from rivetline.errors import StatusCode

PROTOCOL_VERSION = 1
DEFAULT_PORT = 4850
PORT_ENV = "RIVETLINE_PORT"
MAX_PAYLOAD = 1 << 20
HEADER = struct.Struct(">I")


class Kind(str, Enum):
    HELLO = "Hello"
    BROWSE = "Browse"
    READ = "Read"
    CALL = "Call"
    SUBSCRIBE = "Subscribe"
    OK = "Ok"
    VALUE = "Value"
    EVENTS = "Events"
    NOTIFY = "Notify"
    ERROR = "Error"


REQUEST_KINDS = frozenset({Kind.HELLO, Kind.BROWSE, Kind.READ, Kind.CALL, Kind.SUBSCRIBE})


class ProtocolError(Exception):
    code = StatusCode.BadMessage


class BadMessage(ProtocolError):
    pass


class FrameTooLarge(ProtocolError):
    code = StatusCode.FrameTooLarge


class NeedMoreData(Exception):
    """The buffer holds only part of a frame."""


@dataclass(frozen=True)
class Message:
    kind: Kind
    request_id: Optional[int] = None
    body: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        obj = {"kind": self.kind.value, "body": self.body}
        if self.request_id is not None:
            obj["requestId"] = self.request_id
        return obj


def encode_frame(message: Message) -> bytes:
    payload = json.dumps(message.to_json(), sort_keys=True, separators=(",", ":"),
                         ensure_ascii=False, allow_nan=False).encode("utf-8")
    if len(payload) > MAX_PAYLOAD:
        raise FrameTooLarge(f"payload of {len(payload)} bytes exceeds {MAX_PAYLOAD}")
    return HEADER.pack(len(payload)) + payload


def parse_payload(payload: bytes) -> Message:
    try:
        obj = json.loads(payload.decode("utf-8"))
    except (UnicodeDecodeError, ValueError) as exc:
        raise BadMessage(f"undecodable payload: {exc}") from None
    if not isinstance(obj, dict) or set(obj) - {"kind", "requestId", "body"}:
        raise BadMessage("payload must be an object with kind/requestId/body")
    try:
        kind = Kind(obj.get("kind"))
    except ValueError:
        raise BadMessage(f"unknown message kind {obj.get('kind')!r}") from None
    request_id = obj.get("requestId")
    if request_id is not None and (not isinstance(request_id, int) or isinstance(request_id, bool)):
        raise BadMessage("requestId must be an integer")
    body = obj.get("body", {})
    if not isinstance(body, dict):
        raise BadMessage("body must be an object")
    return Message(kind, request_id, body)


def decode_frame(buffer: bytes) -> tuple[Message, bytes]:
    """Split one message off the front of ``buffer``.

    Raises :class:`NeedMoreData` for a partial frame and :class:`FrameTooLarge`
    as soon as the header declares an oversized payload.
    """
    if len(buffer) < HEADER.size:
        raise NeedMoreData()
    (length,) = HEADER.unpack_from(buffer)
    if length > MAX_PAYLOAD:
        raise FrameTooLarge(f"declared payload of {length} bytes exceeds {MAX_PAYLOAD}")
    end = HEADER.size + length
    if len(buffer) < end:
        raise NeedMoreData()
    return parse_payload(bytes(buffer[HEADER.size:end])), bytes(buffer[end:])


class FrameDecoder:
    """Incremental decoder for a byte stream."""

    def __init__(self):
        self._buffer = b""
        self.frames_seen = 0

    def push(self, data: bytes) -> None:
        self._buffer += data

    def next_message(self) -> Optional[Message]:
        """Next complete message, or None if more bytes are needed."""
        try:
            message, self._buffer = decode_frame(self._buffer)
        except NeedMoreData:
            return None
        except ProtocolError as exc:
            exc.args = (f"frame #{self.frames_seen}: {exc}",)
            raise
        self.frames_seen += 1
        return message

    def feed(self, data: bytes) -> list[Message]:
        """Push ``data`` and return every message now complete."""
        self.push(data)
        out = []
        while (message := self.next_message()) is not None:
            out.append(message)
        return out


def error_message(request_id: Optional[int], code: StatusCode, text: str = "") -> Message:
    return Message(Kind.ERROR, request_id, {"code": int(code), "message": text})


def resolve_port(flag: Optional[int] = None) -> int:
    """CLI flag, then the environment variable, then the default port."""
    if flag is not None:
        return flag
    env = os.environ.get(PORT_ENV)
    return int(env) if env else DEFAULT_PORT
