"""Bit-exact frame codec for the oblivious transfer exchange.

Frame layout::

    "KNOT" | version u8 (0x01) | type u8 | body_len u32be | body

Inside bodies, integers are ``u32be length || minimal big-endian magnitude``
(zero is the empty string), lists are ``u32be count || items``. Decoding is
strict: non-minimal integers and trailing bytes are rejected, so every message
has exactly one encoding.
"""

from __future__ import annotations

import enum
import struct
import threading
from dataclasses import dataclass

from .errors import OTError, ParameterError
from .group import GroupParams
from .protocol import MsgA, MsgChoice, MsgReply, MsgSecrets, SessionParams
from .sealing import DIGEST_SIZE, SUITE_SHA256_CTR, SealedSecret

MAGIC = b"KNOT"
VERSION = 0x01
HEADER = struct.Struct("!4sBBI")
HEADER_SIZE = HEADER.size
MAX_BODY = 1 << 28


class MsgType(enum.IntEnum):
    HELLO = 0x01
    MSG_A = 0x02
    MSG_CHOICE = 0x03
    MSG_REPLY = 0x04
    MSG_SECRETS = 0x05
    ERROR = 0x7F


class DecodeErrorCode(enum.IntEnum):
    TRUNCATED = 1
    BAD_MAGIC = 2
    BAD_VERSION = 3
    UNKNOWN_TYPE = 4
    NON_CANONICAL = 5
    TRAILING = 6
    MALFORMED = 7


class DecodeError(OTError):
    def __init__(self, code: DecodeErrorCode, detail: str = ""):
        super().__init__(f"{code.name.lower()}: {detail}" if detail else code.name.lower())
        self.code = code


@dataclass(frozen=True)
class Hello:
    session: SessionParams
    suite: int = SUITE_SHA256_CTR


@dataclass(frozen=True)
class ErrorMsg:
    code: int
    reason: str = ""


# Error-frame codes sent by an endpoint that abandons the session.
ABORT_PARAMS = 1
ABORT_PROTOCOL = 2
ABORT_STATE = 3
ABORT_DECODE = 4
ABORT_INTERNAL = 5


def _u32(n: int) -> bytes:
    return n.to_bytes(4, "big")


def _int(v: int) -> bytes:
    if v < 0:
        raise ValueError("negative integers are not encodable")
    raw = v.to_bytes((v.bit_length() + 7) // 8, "big")
    return _u32(len(raw)) + raw


def _ints(values) -> bytes:
    values = list(values)
    return _u32(len(values)) + b"".join(_int(v) for v in values)


def _body(message) -> tuple[MsgType, bytes]:
    if isinstance(message, MsgA):
        return MsgType.MSG_A, _int(message.ma)
    if isinstance(message, MsgChoice):
        return MsgType.MSG_CHOICE, _ints(message.mjs) + _int(message.mb)
    if isinstance(message, MsgReply):
        return MsgType.MSG_REPLY, _ints(message.replies)
    if isinstance(message, MsgSecrets):
        parts = [_u32(len(message.sealed))]
        for s in message.sealed:
            parts += [_u32(len(s.ciphertext)), s.ciphertext, s.commitment]
        return MsgType.MSG_SECRETS, b"".join(parts)
    if isinstance(message, Hello):
        sess = message.session
        grp = sess.group
        body = (bytes([message.suite]) + _int(grp.p) + _int(grp.q) + _int(grp.g)
                + _u32(sess.n) + _u32(sess.k) + b"".join(_int(x) for x in sess.xs))
        return MsgType.HELLO, body
    if isinstance(message, ErrorMsg):
        reason = message.reason.encode("utf-8")
        return MsgType.ERROR, bytes([message.code]) + _u32(len(reason)) + reason
    raise TypeError(f"cannot encode {type(message).__name__}")


def encode(message) -> bytes:
    msg_type, body = _body(message)
    return HEADER.pack(MAGIC, VERSION, msg_type, len(body)) + body


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise DecodeError(DecodeErrorCode.TRUNCATED, f"need {n} bytes at offset {self.pos}")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u8(self) -> int:
        return self.take(1)[0]

    def u32(self) -> int:
        return int.from_bytes(self.take(4), "big")

    def int(self) -> int:
        raw = self.take(self.u32())
        if raw[:1] == b"\x00":
            raise DecodeError(DecodeErrorCode.NON_CANONICAL, "integer has a leading zero byte")
        return int.from_bytes(raw, "big")

    def ints(self) -> tuple[int, ...]:
        count = self.u32()
        # Each integer costs at least its 4-byte length prefix.
        if count * 4 > len(self.data) - self.pos:
            raise DecodeError(DecodeErrorCode.TRUNCATED, f"list of {count} integers overruns body")
        return tuple(self.int() for _ in range(count))

    def finish(self) -> None:
        if self.pos != len(self.data):
            raise DecodeError(DecodeErrorCode.TRAILING, f"{len(self.data) - self.pos} unread bytes")


def _decode_hello(r: _Reader) -> Hello:
    suite = r.u8()
    p, q, g = r.int(), r.int(), r.int()
    n, k = r.u32(), r.u32()
    if n * 4 > len(r.data) - r.pos:
        raise DecodeError(DecodeErrorCode.TRUNCATED, f"index set of {n} overruns body")
    xs = tuple(r.int() for _ in range(n))
    if suite != SUITE_SHA256_CTR:
        raise DecodeError(DecodeErrorCode.MALFORMED, f"unsupported suite {suite:#04x}")
    if p != 2 * q + 1 or not 2 <= g <= p - 2:
        raise DecodeError(DecodeErrorCode.MALFORMED, "group parameters are not of safe-prime shape")
    try:
        session = SessionParams(group=GroupParams(p, q, g), xs=xs, k=k)
    except ParameterError as exc:
        raise DecodeError(DecodeErrorCode.MALFORMED, str(exc)) from None
    return Hello(session=session, suite=suite)


def _decode_secrets(r: _Reader) -> MsgSecrets:
    count = r.u32()
    if count * (4 + DIGEST_SIZE) > len(r.data) - r.pos:
        raise DecodeError(DecodeErrorCode.TRUNCATED, f"{count} sealed secrets overrun body")
    sealed = []
    for _ in range(count):
        ct = r.take(r.u32())
        if not ct:
            raise DecodeError(DecodeErrorCode.MALFORMED, "empty ciphertext")
        sealed.append(SealedSecret(ciphertext=ct, commitment=r.take(DIGEST_SIZE)))
    return MsgSecrets(tuple(sealed))


def _decode_error(r: _Reader) -> ErrorMsg:
    code = r.u8()
    raw = r.take(r.u32())
    try:
        reason = raw.decode("utf-8")
    except UnicodeDecodeError:
        raise DecodeError(DecodeErrorCode.MALFORMED, "error reason is not UTF-8") from None
    return ErrorMsg(code=code, reason=reason)


_DECODERS = {
    MsgType.HELLO: _decode_hello,
    MsgType.MSG_A: lambda r: MsgA(r.int()),
    MsgType.MSG_CHOICE: lambda r: MsgChoice(mjs=r.ints(), mb=r.int()),
    MsgType.MSG_REPLY: lambda r: MsgReply(r.ints()),
    MsgType.MSG_SECRETS: _decode_secrets,
    MsgType.ERROR: _decode_error,
}


def parse_header(header: bytes) -> tuple[MsgType, int]:
    if len(header) < HEADER_SIZE:
        raise DecodeError(DecodeErrorCode.TRUNCATED, "short frame header")
    magic, version, msg_type, body_len = HEADER.unpack_from(header)
    if magic != MAGIC:
        raise DecodeError(DecodeErrorCode.BAD_MAGIC, repr(magic))
    if version != VERSION:
        raise DecodeError(DecodeErrorCode.BAD_VERSION, str(version))
    try:
        kind = MsgType(msg_type)
    except ValueError:
        raise DecodeError(DecodeErrorCode.UNKNOWN_TYPE, f"{msg_type:#04x}") from None
    if body_len > MAX_BODY:
        raise DecodeError(DecodeErrorCode.MALFORMED, f"body length {body_len} exceeds limit")
    return kind, body_len


def decode(data: bytes):
    """Decode one complete frame, or raise :class:`DecodeError` with a classified code."""
    data = bytes(data)
    kind, body_len = parse_header(data)
    available = len(data) - HEADER_SIZE
    if available < body_len:
        raise DecodeError(DecodeErrorCode.TRUNCATED, f"body has {available} of {body_len} bytes")
    if available > body_len:
        raise DecodeError(DecodeErrorCode.TRAILING, f"{available - body_len} bytes after frame")
    reader = _Reader(data[HEADER_SIZE:])
    message = _DECODERS[kind](reader)
    reader.finish()
    return message


def frame_type(data: bytes) -> MsgType:
    return parse_header(data)[0]


SENDER_TO_RECEIVER = "S->R"
RECEIVER_TO_SENDER = "R->S"


@dataclass(frozen=True)
class TranscriptEntry:
    direction: str
    frame: bytes

    @property
    def msg_type(self) -> MsgType:
        return frame_type(self.frame)


@dataclass(frozen=True)
class Transcript:
    entries: tuple[TranscriptEntry, ...] = ()

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def types(self) -> list[MsgType]:
        return [e.msg_type for e in self.entries]

    @property
    def wire_bytes(self) -> int:
        return sum(len(e.frame) for e in self.entries)

    def messages(self) -> list:
        return [decode(e.frame) for e in self.entries]


def session_transcript(log) -> Transcript:
    """Freeze an iterable of ``(direction, frame_bytes)`` pairs into a transcript."""
    return Transcript(tuple(TranscriptEntry(d, bytes(f)) for d, f in log))


class TranscriptRecorder:
    """Append-only, thread-safe frame log shared by both endpoints of a run."""

    def __init__(self):
        self._log: list[tuple[str, bytes]] = []
        self._lock = threading.Lock()

    def record(self, direction: str, frame: bytes) -> None:
        with self._lock:
            self._log.append((direction, bytes(frame)))

    def freeze(self) -> Transcript:
        with self._lock:
            return session_transcript(self._log)
