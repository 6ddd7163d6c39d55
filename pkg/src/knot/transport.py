"""Frame transports and the two networked endpoints.

A transport moves whole frames over a reliable ordered byte stream. Two are
provided: :class:`SocketTransport` for TCP and :func:`memory_pipe` for an
in-process duplex channel used by tests and the ``local`` command.
"""

from __future__ import annotations

import queue
import socket
import threading
from dataclasses import dataclass, field

from .errors import ChoiceError, OTError, ParameterError, PeerAbort, ProtocolError, StateError
from .group import SMALLEST_SAFE_PRIME, GroupParams, validate_params
from .protocol import (
    MsgSecrets,
    ReceiverState,
    SenderState,
    SessionParams,
    receiver_init,
    receiver_step,
    sender_init,
    sender_seal,
    sender_step,
)
from .sealing import SUITE_SHA256_CTR, Secret
from .wire import (
    ABORT_DECODE,
    ABORT_INTERNAL,
    ABORT_PARAMS,
    ABORT_PROTOCOL,
    ABORT_STATE,
    HEADER_SIZE,
    RECEIVER_TO_SENDER,
    SENDER_TO_RECEIVER,
    DecodeError,
    ErrorMsg,
    Hello,
    Transcript,
    TranscriptRecorder,
    decode,
    encode,
    parse_header,
)

DEFAULT_TIMEOUT = 30.0


class TransportClosed(OTError):
    """The peer went away before a full frame arrived."""


class _MemoryEnd:
    def __init__(self, inbox: queue.Queue, outbox: queue.Queue, timeout: float):
        self._inbox = inbox
        self._outbox = outbox
        self.timeout = timeout

    def send_frame(self, frame: bytes) -> None:
        self._outbox.put(bytes(frame))

    def recv_frame(self) -> bytes:
        try:
            frame = self._inbox.get(timeout=self.timeout)
        except queue.Empty:
            raise TransportClosed("timed out waiting for a frame") from None
        if frame is None:
            raise TransportClosed("peer closed the pipe")
        return frame

    def close(self) -> None:
        self._outbox.put(None)


def memory_pipe(timeout: float = DEFAULT_TIMEOUT) -> tuple[_MemoryEnd, _MemoryEnd]:
    a_to_b: queue.Queue = queue.Queue()
    b_to_a: queue.Queue = queue.Queue()
    return _MemoryEnd(b_to_a, a_to_b, timeout), _MemoryEnd(a_to_b, b_to_a, timeout)


class SocketTransport:
    def __init__(self, sock: socket.socket):
        self.sock = sock

    @classmethod
    def connect(cls, host: str, port: int, timeout: float = DEFAULT_TIMEOUT) -> SocketTransport:
        return cls(socket.create_connection((host, port), timeout=timeout))

    def _read_exact(self, n: int) -> bytes:
        buf = bytearray()
        while len(buf) < n:
            chunk = self.sock.recv(n - len(buf))
            if not chunk:
                raise TransportClosed(f"connection closed after {len(buf)} of {n} bytes")
            buf += chunk
        return bytes(buf)

    def send_frame(self, frame: bytes) -> None:
        self.sock.sendall(frame)

    def recv_frame(self) -> bytes:
        header = self._read_exact(HEADER_SIZE)
        _, body_len = parse_header(header)
        return header + self._read_exact(body_len)

    def close(self) -> None:
        self.sock.close()


def parse_address(address: str) -> tuple[str, int]:
    host, sep, port = address.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"address must be HOST:PORT, got {address!r}")
    return host or "127.0.0.1", int(port)


class _Endpoint:
    def __init__(self, transport, direction: str, recorder: TranscriptRecorder | None):
        self.transport = transport
        self.direction = direction
        self.incoming = RECEIVER_TO_SENDER if direction == SENDER_TO_RECEIVER else SENDER_TO_RECEIVER
        self.recorder = recorder

    def send(self, message) -> None:
        frame = encode(message)
        if self.recorder is not None:
            self.recorder.record(self.direction, frame)
        self.transport.send_frame(frame)

    def recv(self):
        frame = self.transport.recv_frame()
        if self.recorder is not None:
            self.recorder.record(self.incoming, frame)
        message = decode(frame)
        if isinstance(message, ErrorMsg):
            raise PeerAbort(message.code, message.reason)
        return message

    def abort(self, exc: Exception) -> None:
        code = ABORT_INTERNAL
        for cls, c in ((DecodeError, ABORT_DECODE), (ParameterError, ABORT_PARAMS),
                       (ChoiceError, ABORT_PARAMS), (StateError, ABORT_STATE),
                       (ProtocolError, ABORT_PROTOCOL)):
            if isinstance(exc, cls):
                code = c
                break
        try:
            self.send(ErrorMsg(code, str(exc)[:200]))
        except (OSError, OTError):
            pass


def run_sender(transport, session: SessionParams, secrets, rng=None,
               recorder: TranscriptRecorder | None = None) -> SenderState:
    """Sender side: Hello, MsgA, await MsgChoice, MsgReply, MsgSecrets."""
    items = [s if isinstance(s, Secret) else Secret(s) for s in secrets]
    if len(items) != session.n:
        raise ParameterError(f"session has n={session.n} but {len(items)} secrets were supplied")
    end = _Endpoint(transport, SENDER_TO_RECEIVER, recorder)
    try:
        end.send(Hello(session))
        state, msg_a = sender_init(session, rng)
        end.send(msg_a)
        state, reply = sender_step(state, end.recv(), rng)
        end.send(reply)
        state, sealed = sender_seal(state, items)
        end.send(sealed)
    except PeerAbort:
        raise
    except (DecodeError, StateError, ProtocolError) as exc:
        end.abort(exc)
        raise
    return state


@dataclass
class ReceiverOutcome:
    state: ReceiverState
    session: SessionParams
    secrets: dict[int, bytes] = field(default_factory=dict)
    msg_secrets: MsgSecrets | None = None


def accept_hello(hello: Hello, *, group: GroupParams | None = None, k: int | None = None,
                 xs=None, min_p: int = SMALLEST_SAFE_PRIME) -> SessionParams:
    """Check the sender's proposed agreement against local policy and expectations."""
    session = hello.session
    if hello.suite != SUITE_SHA256_CTR:
        raise ParameterError(f"unsupported suite {hello.suite}")
    if not validate_params(session.group, min_p):
        raise ParameterError("sender proposed invalid group parameters")
    if group is not None and session.group != group:
        raise ParameterError("sender's group differs from the local parameters")
    if k is not None and session.k != k:
        raise ParameterError(f"sender proposed k={session.k}, expected k={k}")
    if xs is not None and session.xs != tuple(xs):
        raise ParameterError("sender's index set differs from the local parameters")
    return session


def run_receiver(transport, choices, rng=None, recorder: TranscriptRecorder | None = None, *,
                 group: GroupParams | None = None, k: int | None = None, xs=None,
                 factor: int | None = None, min_p: int = SMALLEST_SAFE_PRIME) -> ReceiverOutcome:
    """Receiver side: accept Hello, answer MsgA, recover keys, open the chosen secrets."""
    end = _Endpoint(transport, RECEIVER_TO_SENDER, recorder)
    try:
        hello = end.recv()
        if not isinstance(hello, Hello):
            raise StateError(f"expected Hello, got {type(hello).__name__}")
        session = accept_hello(hello, group=group, k=k, xs=xs, min_p=min_p)
        state = receiver_init(session, choices, factor)
        state, msg_choice = receiver_step(state, end.recv(), rng)
        end.send(msg_choice)
        state, _ = receiver_step(state, end.recv(), rng)
        msg_secrets = end.recv()
        if not isinstance(msg_secrets, MsgSecrets):
            raise StateError(f"receiver in phase {state.phase.value} cannot accept "
                             f"{type(msg_secrets).__name__}")
    except PeerAbort:
        raise
    except (DecodeError, StateError, ProtocolError, ParameterError, ChoiceError) as exc:
        end.abort(exc)
        raise
    outcome = ReceiverOutcome(state=state, session=session, msg_secrets=msg_secrets)
    _, outcome.secrets = receiver_step(state, msg_secrets)
    return outcome


@dataclass
class LocalRun:
    transcript: Transcript
    sender: SenderState
    receiver: ReceiverOutcome


def run_local(session: SessionParams, secrets, choices, *, sender_rng=None, receiver_rng=None,
              factor: int | None = None, timeout: float = DEFAULT_TIMEOUT) -> LocalRun:
    """Both endpoints in one process over a memory pipe, sender on a worker thread.

    The transcript is the receiver's view, which sees every frame in order.
    """
    recorder = TranscriptRecorder()
    s_end, r_end = memory_pipe(timeout)
    box: dict = {}

    def sender_main():
        try:
            box["state"] = run_sender(s_end, session, secrets, sender_rng)
        except BaseException as exc:  # re-raised on the calling thread
            box["error"] = exc
        finally:
            s_end.close()

    worker = threading.Thread(target=sender_main, name="knot-sender", daemon=True)
    worker.start()
    try:
        outcome = run_receiver(r_end, choices, receiver_rng, recorder, factor=factor)
    except (TransportClosed, PeerAbort):
        r_end.close()
        worker.join(timeout)
        # The sender's own exception explains the abort better than its echo.
        if "error" in box:
            raise box["error"] from None
        raise
    finally:
        r_end.close()
        worker.join(timeout)
    if "error" in box:
        raise box["error"]
    return LocalRun(transcript=recorder.freeze(), sender=box["state"], receiver=outcome)
