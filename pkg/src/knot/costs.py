"""Exponentiation and transfer accounting, with the closed-form cost formulas.

Accounting convention:

* The setup exponentiations (M_A on the sender, M_B and the public powers g^x
  on the receiver) are not counted.
* Every sender key K_Aj, every reply M_j^N_A2, every receiver M_j and every
  receiver key K_Bj is exactly one exponentiation.
* Transferred elements are group elements on the wire (M_A, each M_j, M_B,
  each reply) plus one unit per sealed secret, whatever its size. The Hello
  frame carries agreement, not protocol traffic, and is not an element.

Under this convention a k-of-n run costs ``n + k`` / ``2k`` exponentiations
(sender / receiver) and ``n + 2k + 2`` elements; the k = 1 case gives
``n + 1`` / ``2`` / ``n + 4``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import AccountingError, ParameterError
from .protocol import MsgA, MsgChoice, MsgReply, MsgSecrets, SessionParams, run_1_of_n
from .wire import Hello, Transcript


class CostMode(enum.Enum):
    ONE_OF_N = "1-of-n"
    K_OF_N = "k-of-n"
    NAIVE_K_FOLD = "naive-k-fold"


@dataclass(frozen=True)
class CostReport:
    mode: CostMode
    n: int
    k: int
    sender_exps: int
    receiver_exps: int
    elements: int
    wire_bytes: int = 0

    def __post_init__(self):
        if min(self.sender_exps, self.receiver_exps, self.elements, self.wire_bytes) < 0:
            raise ValueError("cost counters must be non-negative")

    def counts(self) -> tuple[int, int, int]:
        return self.sender_exps, self.receiver_exps, self.elements

    def to_kv(self) -> str:
        return (f"mode={self.mode.value} n={self.n} k={self.k} sender_exps={self.sender_exps} "
                f"receiver_exps={self.receiver_exps} elements={self.elements} bytes={self.wire_bytes}")


def _mode_for(k: int) -> CostMode:
    return CostMode.ONE_OF_N if k == 1 else CostMode.K_OF_N


def _check_sizes(n: int, k: int) -> None:
    if not 1 <= k <= n:
        raise ParameterError(f"need 1 <= k <= n, got n={n}, k={k}")


def expected_costs(n: int, k: int) -> CostReport:
    """Closed-form costs of the direct protocol."""
    _check_sizes(n, k)
    return CostReport(_mode_for(k), n, k, n + k, 2 * k, n + 2 * k + 2)


def naive_baseline(n: int, k: int) -> CostReport:
    """k independent 1-of-n runs."""
    _check_sizes(n, k)
    one = expected_costs(n, 1)
    mode = CostMode.ONE_OF_N if k == 1 else CostMode.NAIVE_K_FOLD
    return CostReport(mode, n, k, k * one.sender_exps, k * one.receiver_exps, k * one.elements)


def account_run(transcript: Transcript, session) -> CostReport:
    """Cost report derived purely from the frames of a completed run."""
    by_type: dict[type, object] = {}
    for message in transcript.messages():
        if type(message) in by_type:
            raise AccountingError(f"duplicate {type(message).__name__} frame in transcript")
        by_type[type(message)] = message
    missing = [t.__name__ for t in (Hello, MsgA, MsgChoice, MsgReply, MsgSecrets) if t not in by_type]
    if missing:
        raise AccountingError(f"transcript incomplete, missing {', '.join(missing)}")
    choice: MsgChoice = by_type[MsgChoice]
    reply: MsgReply = by_type[MsgReply]
    sealed: MsgSecrets = by_type[MsgSecrets]
    n, k = session.n, session.k
    if len(sealed.sealed) != n or len(choice.mjs) != k or len(reply.replies) != k:
        raise AccountingError("transcript arities do not match the session")
    elements = tally_elements(by_type[MsgA], choice, reply, sealed)
    return CostReport(
        mode=_mode_for(k),
        n=n,
        k=k,
        sender_exps=len(sealed.sealed) + len(reply.replies),
        receiver_exps=len(choice.mjs) + len(reply.replies),
        elements=elements,
        wire_bytes=transcript.wire_bytes,
    )


def tally_elements(msg_a: MsgA, msg_choice: MsgChoice, msg_reply: MsgReply,
                   msg_secrets: MsgSecrets) -> int:
    del msg_a  # always exactly one element
    return 1 + len(msg_choice.mjs) + 1 + len(msg_reply.replies) + len(msg_secrets.sealed)


def measured_costs(sender_state, receiver_state, transcript: Transcript) -> CostReport:
    """Exponentiations from the live counters kept by the state machines, transfer from frames."""
    session = sender_state.session
    framed = account_run(transcript, session)
    return CostReport(
        mode=_mode_for(session.k),
        n=session.n,
        k=session.k,
        sender_exps=sender_state.exps,
        receiver_exps=receiver_state.exps,
        elements=framed.elements,
        wire_bytes=framed.wire_bytes,
    )


def run_costs(result) -> CostReport:
    """Measured costs of an in-memory :class:`~knot.protocol.RunResult` (no framing)."""
    if result.msg_secrets is None:
        raise AccountingError("run stopped before the secrets were sent")
    session = result.sender.session
    return CostReport(
        mode=_mode_for(session.k),
        n=session.n,
        k=session.k,
        sender_exps=result.sender.exps,
        receiver_exps=result.receiver.exps,
        elements=tally_elements(result.msg_a, result.msg_choice, result.msg_reply, result.msg_secrets),
    )


def combine(reports, mode: CostMode = CostMode.NAIVE_K_FOLD) -> CostReport:
    """Sum several 1-of-n reports into one k-fold report."""
    reports = list(reports)
    if not reports:
        raise AccountingError("nothing to combine")
    n = reports[0].n
    return CostReport(
        mode=mode if len(reports) > 1 else CostMode.ONE_OF_N,
        n=n,
        k=len(reports),
        sender_exps=sum(r.sender_exps for r in reports),
        receiver_exps=sum(r.receiver_exps for r in reports),
        elements=sum(r.elements for r in reports),
        wire_bytes=sum(r.wire_bytes for r in reports),
    )


def run_naive_k_fold(session: SessionParams, choices, secrets, *, sender_rng=None,
                     receiver_rng=None) -> tuple[CostReport, dict[int, bytes]]:
    """Fetch k secrets with k separate 1-of-n sessions; measured costs and the secrets."""
    single = SessionParams(group=session.group, xs=session.xs, k=1)
    reports, recovered = [], {}
    for c in choices:
        result = run_1_of_n(single, c, secrets, sender_rng=sender_rng, receiver_rng=receiver_rng)
        reports.append(run_costs(result))
        recovered.update(result.recovered)
    return combine(reports), recovered


def render_table(reports) -> str:
    header = ("mode", "n", "k", "sender_exps", "receiver_exps", "elements", "bytes")
    rows = [header] + [
        (r.mode.value, str(r.n), str(r.k), str(r.sender_exps), str(r.receiver_exps),
         str(r.elements), str(r.wire_bytes))
        for r in reports
    ]
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    lines = ["  ".join(cell.rjust(w) if i else cell.ljust(w) for i, (cell, w) in enumerate(zip(row, widths)))
             for row in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)
