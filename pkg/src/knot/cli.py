"""Command-line front-end: ``knot {params,send,recv,local,demo,costs}``.

Exit codes:

    0  success
    1  demo trace mismatch or unexpected internal failure
    2  usage error (bad flags, bad choice indices, bits out of range)
    3  invalid or mismatched group parameters
    4  protocol error (malformed frame, wrong arity, peer abort)
    5  state error (message arrived in the wrong phase)
    6  verification failure (a chosen secret failed its commitment)
    7  same-message attack detected (duplicate commitments)
    8  connection failure
    9  file I/O failure
"""

from __future__ import annotations

import argparse
import random
import socket
import struct
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import costs
from .errors import (
    ChoiceError,
    ParameterError,
    ProtocolError,
    SameMessageError,
    StateError,
    VerificationError,
)
from .group import MAX_BITS, MIN_BITS, GroupParams, ScriptedRandom, generate_safe_prime, load_params, \
    save_params, validate_params
from .protocol import MsgChoice, MsgReply, SessionParams
from .transport import (
    SocketTransport,
    TransportClosed,
    parse_address,
    run_local,
    run_receiver,
    run_sender,
)
from .wire import DecodeError, MsgType, TranscriptRecorder

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_PARAMS = 3
EXIT_PROTOCOL = 4
EXIT_STATE = 5
EXIT_VERIFY = 6
EXIT_SAME_MESSAGE = 7
EXIT_CONNECT = 8
EXIT_IO = 9

# Ordered: subclasses before their bases.
_EXIT_MAP = (
    (SameMessageError, EXIT_SAME_MESSAGE),
    (VerificationError, EXIT_VERIFY),
    (ChoiceError, EXIT_USAGE),
    (ParameterError, EXIT_PARAMS),
    (StateError, EXIT_STATE),
    (DecodeError, EXIT_PROTOCOL),
    (ProtocolError, EXIT_PROTOCOL),
    (TransportClosed, EXIT_CONNECT),
    (ConnectionError, EXIT_CONNECT),
    (socket.timeout, EXIT_CONNECT),
    (OSError, EXIT_IO),
)


def exit_code_for(exc: BaseException) -> int:
    for cls, code in _EXIT_MAP:
        if isinstance(exc, cls):
            return code
    return EXIT_FAILURE


@dataclass
class RunConfig:
    role: str
    params_path: Path | None = None
    secrets_path: Path | None = None
    choices: list[int] = field(default_factory=list)
    k: int = 1
    address: str = ""
    seed: int | None = None
    text: bool = False
    out_path: Path | None = None
    factor: int | None = None

    def rngs(self):
        if self.seed is None:
            return None, None
        return random.Random(f"{self.seed}/sender"), random.Random(f"{self.seed}/receiver")


def read_records(path, text: bool = False) -> list[bytes]:
    """Secrets file: 4-byte big-endian length-prefixed records, or lines with ``text``."""
    data = Path(path).read_bytes()
    if text:
        lines = data.split(b"\n")
        if lines and lines[-1] == b"":
            lines.pop()
        return [line.rstrip(b"\r") for line in lines]
    records, pos = [], 0
    while pos < len(data):
        if pos + 4 > len(data):
            raise ParameterError("secrets file ends inside a length prefix")
        (length,) = struct.unpack_from("!I", data, pos)
        pos += 4
        if pos + length > len(data):
            raise ParameterError("secrets file ends inside a record")
        records.append(data[pos : pos + length])
        pos += length
    return records


def write_records(path, records, text: bool = False) -> None:
    if text:
        Path(path).write_bytes(b"".join(r + b"\n" for r in records))
    else:
        Path(path).write_bytes(b"".join(struct.pack("!I", len(r)) + r for r in records))


def _parse_choices(raw: str) -> list[int]:
    try:
        values = [int(v) for v in raw.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"choices must be comma-separated integers: {raw!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("at least one choice is required")
    if any(v < 1 for v in values):
        raise argparse.ArgumentTypeError("choices are 1-based indices")
    return values


def _load_group(path) -> tuple[GroupParams, tuple[int, ...] | None]:
    group, xs = load_params(path)
    if not validate_params(group):
        raise ParameterError(f"{path}: parameters are not a valid safe-prime group")
    return group, xs


def _session_for(group: GroupParams, xs, n: int, k: int) -> SessionParams:
    if xs is None:
        return SessionParams.default(group, n, k)
    if len(xs) != n:
        raise ParameterError(f"params file lists {len(xs)} indices but there are {n} secrets")
    return SessionParams(group=group, xs=xs, k=k)


def cmd_params(args) -> int:
    params = generate_safe_prime(args.bits)
    save_params(args.out, params)
    print(f"wrote {args.out}: {params.p.bit_length()}-bit safe prime, g={params.g}")
    return EXIT_OK


def _report(label: str, report: costs.CostReport) -> None:
    print(f"{label}: {report.to_kv()}")


def cmd_send(cfg: RunConfig, sessions: int = 1) -> int:
    group, xs = _load_group(cfg.params_path)
    secrets = read_records(cfg.secrets_path, cfg.text)
    session = _session_for(group, xs, len(secrets), cfg.k)
    rng = cfg.rngs()[0]
    host, port = parse_address(cfg.address)
    with socket.create_server((host, port)) as server:
        print(f"listening on {host}:{server.getsockname()[1]} (n={session.n}, k={session.k})", flush=True)
        for _ in range(sessions):
            conn, peer = server.accept()
            transport = SocketTransport(conn)
            recorder = TranscriptRecorder()
            try:
                state = run_sender(transport, session, secrets, rng, recorder)
            finally:
                transport.close()
            report = costs.account_run(recorder.freeze(), session)
            print(f"session with {peer[0]}:{peer[1]} complete")
            _report("costs", report)
            print(f"measured sender_exps={state.exps}")
    return EXIT_OK


def cmd_recv(cfg: RunConfig) -> int:
    group, xs = _load_group(cfg.params_path)
    rng = cfg.rngs()[1]
    host, port = parse_address(cfg.address)
    transport = SocketTransport.connect(host, port)
    recorder = TranscriptRecorder()
    try:
        outcome = run_receiver(transport, cfg.choices, rng, recorder, group=group, k=cfg.k,
                               xs=xs, factor=cfg.factor)
    finally:
        transport.close()
    return _finish_receiver(cfg, outcome, recorder.freeze(), outcome.state.exps)


def _finish_receiver(cfg: RunConfig, outcome, transcript, receiver_exps: int) -> int:
    chosen = sorted(outcome.secrets)
    print("verified commitments at indices: " + ",".join(str(c) for c in chosen))
    if cfg.out_path is not None:
        write_records(cfg.out_path, [outcome.secrets[c] for c in chosen], cfg.text)
        print(f"wrote {len(chosen)} secrets to {cfg.out_path}")
    _report("costs", costs.account_run(transcript, outcome.session))
    print(f"measured receiver_exps={receiver_exps}")
    return EXIT_OK


def cmd_local(cfg: RunConfig) -> int:
    group, xs = _load_group(cfg.params_path)
    secrets = read_records(cfg.secrets_path, cfg.text)
    session = _session_for(group, xs, len(secrets), cfg.k)
    sender_rng, receiver_rng = cfg.rngs()
    run = run_local(session, secrets, cfg.choices, sender_rng=sender_rng,
                    receiver_rng=receiver_rng, factor=cfg.factor)
    chosen = sorted(run.receiver.secrets)
    print("verified commitments at indices: " + ",".join(str(c) for c in chosen))
    if cfg.out_path is not None:
        write_records(cfg.out_path, [run.receiver.secrets[c] for c in chosen], cfg.text)
        print(f"wrote {len(chosen)} secrets to {cfg.out_path}")
    measured = costs.measured_costs(run.sender, run.receiver.state, run.transcript)
    print(costs.render_table([measured, costs.naive_baseline(session.n, session.k)]))
    _report("costs", measured)
    return EXIT_OK


DEMO_GROUP = GroupParams(p=23, q=11, g=5)
DEMO_XS = (1, 2, 3, 4, 5)
DEMO_CHOICES = (3, 5)
DEMO_SENDER_SCRIPT = (4, 8)          # N_A1, N_A2
DEMO_RECEIVER_SCRIPT = (5, 6)        # N_B1 / factor, N_B2
DEMO_EXPECTED = {
    "N_A1": 4,
    "M_A": 7,
    "N_B1": 10,
    "N_B2": 6,
    "N_B3": 12,
    "M_j": [13, 4],
    "M_B": 9,
    "N_A2": 8,
    "K_A": [9, 6, 4, 18, 12],
    "replies": [2, 9],
    "K_B": [4, 12],
}


def demo_trace() -> tuple[list[str], dict]:
    session = SessionParams(group=DEMO_GROUP, xs=DEMO_XS, k=len(DEMO_CHOICES))
    secrets = [f"secret S_{i}".encode() for i in range(1, len(DEMO_XS) + 1)]
    run = run_local(session, secrets, DEMO_CHOICES,
                    sender_rng=ScriptedRandom(DEMO_SENDER_SCRIPT),
                    receiver_rng=ScriptedRandom(DEMO_RECEIVER_SCRIPT))
    msgs = {e.msg_type: m for e, m in zip(run.transcript, run.transcript.messages())}
    choice: MsgChoice = msgs[MsgType.MSG_CHOICE]
    reply: MsgReply = msgs[MsgType.MSG_REPLY]
    s, r = run.sender, run.receiver.state
    got = {
        "N_A1": s.nonce_a1,
        "M_A": msgs[MsgType.MSG_A].ma,
        "N_B1": r.nonce_b1,
        "N_B2": r.nonce_b2,
        "N_B3": r.nonce_b3,
        "M_j": list(choice.mjs),
        "M_B": choice.mb,
        "N_A2": s.nonce_a2,
        "K_A": list(s.keys),
        "replies": list(reply.replies),
        "K_B": list(r.keys),
    }
    g, p = DEMO_GROUP.g, DEMO_GROUP.p
    lines = [
        f"agreement: p={p} q={DEMO_GROUP.q} g={g} x={list(DEMO_XS)} k={session.k}",
        f"receiver choices: {list(DEMO_CHOICES)}",
        f"step 1  N_A1 = {got['N_A1']}",
        f"        M_A = {g}^({got['N_A1']} + {sum(DEMO_XS)}) mod {p} = {got['M_A']}",
        f"step 2  N_B1 = {got['N_B1']}, N_B2 = {got['N_B2']}, N_B3 = {got['N_B3']} (factor {r.factor})",
        f"step 3  M_j = (M_A / g^x_j)^(N_B1*N_B2/N_B3) mod {p} = {got['M_j']}",
        f"step 4  M_B = {g}^{got['N_B1']} mod {p} = {got['M_B']}",
        f"step 5  N_A2 = {got['N_A2']}",
        f"        K_A = {got['K_A']}",
        f"step 6  M_j^N_A2 mod {p} = {got['replies']}",
        f"step 7  K_B = (M_j^N_A2)^(N_B3/N_B2) mod {p} = {got['K_B']}",
    ]
    for c, kb in zip(r.choices, r.keys):
        lines.append(f"        K_B for S_{c} = {kb}, K_A{c} = {s.keys[c - 1]}")
    for c in sorted(run.receiver.secrets):
        lines.append(f"step 9  S_{c} opened: {run.receiver.secrets[c].decode()}")
    lines.append(costs.measured_costs(s, r, run.transcript).to_kv())
    return lines, got


def cmd_demo(args) -> int:
    lines, got = demo_trace()
    for line in lines:
        print(line)
    mismatches = [(key, want, got[key]) for key, want in DEMO_EXPECTED.items() if got[key] != want]
    if mismatches:
        for key, want, have in mismatches:
            print(f"MISMATCH {key}: expected {want}, got {have}", file=sys.stderr)
        return EXIT_FAILURE
    print("all values match the reference trace")
    return EXIT_OK


def cmd_costs(args) -> int:
    direct = costs.expected_costs(args.n, args.k)
    naive = costs.naive_baseline(args.n, args.k)
    print(costs.render_table([direct, naive]))
    print("direct " + direct.to_kv())
    print("naive " + naive.to_kv())
    return EXIT_OK


def _bits(raw: str) -> int:
    bits = int(raw)
    if not MIN_BITS <= bits <= MAX_BITS:
        raise argparse.ArgumentTypeError(f"bits must lie in [{MIN_BITS}, {MAX_BITS}]")
    return bits


def _positive(raw: str) -> int:
    value = int(raw)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="knot", description="Diffie-Hellman k-out-of-n oblivious transfer")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("params", help="generate a safe-prime parameter file")
    p.add_argument("--bits", type=_bits, default=512)
    p.add_argument("--out", type=Path, required=True)

    def common(sp, *, secrets: bool, choices: bool):
        sp.add_argument("--params", type=Path, required=True)
        sp.add_argument("--k", type=_positive, required=True)
        if secrets:
            sp.add_argument("--secrets", type=Path, required=True)
        if choices:
            sp.add_argument("--choices", type=_parse_choices, required=True)
            sp.add_argument("--out", type=Path)
            sp.add_argument("--factor", type=_positive, help="nonce factor (default max(k, 2))")
        sp.add_argument("--text", action="store_true", help="newline-delimited secrets files")
        sp.add_argument("--seed", type=int, help="deterministic nonces (insecure, testing only)")

    p = sub.add_parser("send", help="serve secrets to one receiver over TCP")
    common(p, secrets=True, choices=False)
    p.add_argument("--listen", required=True, metavar="HOST:PORT")
    p.add_argument("--sessions", type=_positive, default=1)
    p.add_argument("--insecure-deterministic", action="store_true")

    p = sub.add_parser("recv", help="fetch chosen secrets from a sender over TCP")
    common(p, secrets=False, choices=True)
    p.add_argument("--connect", required=True, metavar="HOST:PORT")
    p.add_argument("--insecure-deterministic", action="store_true")

    p = sub.add_parser("local", help="run sender and receiver in one process")
    common(p, secrets=True, choices=True)

    sub.add_parser("demo", help="replay the 23-element worked example")

    p = sub.add_parser("costs", help="cost formulas: direct protocol vs k-fold 1-of-n")
    p.add_argument("--n", type=_positive, required=True)
    p.add_argument("--k", type=_positive, required=True)
    return parser


def _config(args) -> RunConfig:
    return RunConfig(
        role=args.command,
        params_path=args.params,
        secrets_path=getattr(args, "secrets", None),
        choices=getattr(args, "choices", None) or [],
        k=args.k,
        address=getattr(args, "listen", None) or getattr(args, "connect", None) or "",
        seed=args.seed,
        text=args.text,
        out_path=getattr(args, "out", None),
        factor=getattr(args, "factor", None),
    )


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "costs" and args.k > args.n:
        parser.error("need k <= n")
    if args.command in ("recv", "local") and len(args.choices) != args.k:
        parser.error(f"--choices lists {len(args.choices)} indices but --k is {args.k}")
    if args.command in ("recv", "local") and len(set(args.choices)) != len(args.choices):
        parser.error("--choices must be distinct")
    if args.command in ("send", "recv") and args.seed is not None and not args.insecure_deterministic:
        parser.error("--seed on a networked run requires --insecure-deterministic")
    try:
        if args.command == "params":
            return cmd_params(args)
        if args.command == "demo":
            return cmd_demo(args)
        if args.command == "costs":
            return cmd_costs(args)
        cfg = _config(args)
        if args.command == "send":
            return cmd_send(cfg, args.sessions)
        if args.command == "recv":
            return cmd_recv(cfg)
        return cmd_local(cfg)
    except Exception as exc:  # mapped to documented exit codes
        code = exit_code_for(exc)
        print(f"knot {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
