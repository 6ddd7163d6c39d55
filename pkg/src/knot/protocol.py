"""Sender and receiver state machines for Diffie-Hellman k-out-of-n oblivious transfer.

Message flow (sender = Alice, receiver = Bob)::

    sender_init      -> MsgA       M_A = g^(N_A1 + sum(xs))
    receiver_choose  -> MsgChoice  M_j = (M_A / g^x_cj)^(N_B1 / factor), M_B = g^N_B1
    sender_respond   -> MsgReply   M_j^N_A2; keys K_Aj = M_B^((N_A1 + sum(xs) - x_j) * N_A2)
    receiver_recover               K_Bj = reply_j^factor
    sender_seal      -> MsgSecrets every secret sealed under its own K_Aj
    receiver_open                  unseal the chosen ones with K_Bj

1-out-of-n is the ``k = 1`` configuration; see :func:`run_1_of_n`.

States are immutable; every transition returns a new state. Exponentiation
counters follow the cost accounting convention: the setup values M_A, M_B and
the public powers g^x are tallied in ``setup_exps``, every key, reply and M_j
in ``exps``.
"""

from __future__ import annotations

import enum
import secrets as _secrets
from dataclasses import dataclass, field, replace

from .errors import ChoiceError, ParameterError, ProtocolError, StateError
from .group import SMALLEST_SAFE_PRIME, GroupParams, mod_exp, mod_inv, validate_params
from .sealing import SealedSecret, Secret, derive_key, require_distinct, seal, unseal

NONCE_BOUND = 1 << 64

_system_rng = _secrets.SystemRandom()


@dataclass(frozen=True)
class SessionParams:
    group: GroupParams
    xs: tuple[int, ...]
    k: int

    def __post_init__(self):
        object.__setattr__(self, "xs", tuple(int(x) for x in self.xs))
        n = len(self.xs)
        if n < 1:
            raise ParameterError("need at least one secret")
        if not 1 <= self.k <= n:
            raise ParameterError(f"k={self.k} outside [1, n={n}]")
        if len(set(self.xs)) != n:
            raise ParameterError("index set xs must be distinct")
        if any(not 1 <= x <= self.group.p - 2 for x in self.xs):
            raise ParameterError("index set xs must lie in [1, p-2]")

    @classmethod
    def default(cls, group: GroupParams, n: int, k: int) -> SessionParams:
        """Session with the index set ``{1, ..., n}``."""
        return cls(group=group, xs=tuple(range(1, n + 1)), k=k)

    @property
    def n(self) -> int:
        return len(self.xs)


def check_session(session: SessionParams, min_p: int = SMALLEST_SAFE_PRIME) -> None:
    if not validate_params(session.group, min_p):
        raise ParameterError(f"invalid group parameters (p={session.group.p})")


@dataclass(frozen=True)
class MsgA:
    ma: int


@dataclass(frozen=True)
class MsgChoice:
    mjs: tuple[int, ...]
    mb: int

    def __post_init__(self):
        object.__setattr__(self, "mjs", tuple(self.mjs))


@dataclass(frozen=True)
class MsgReply:
    replies: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "replies", tuple(self.replies))


@dataclass(frozen=True)
class MsgSecrets:
    sealed: tuple[SealedSecret, ...]

    def __post_init__(self):
        object.__setattr__(self, "sealed", tuple(self.sealed))


class SenderPhase(enum.Enum):
    INIT = "init"
    SENT_MA = "sent_ma"
    RESPONDED = "responded"
    SEALED = "sealed"


class ReceiverPhase(enum.Enum):
    INIT = "init"
    SENT_CHOICE = "sent_choice"
    RECOVERED = "recovered"


@dataclass(frozen=True)
class SenderState:
    session: SessionParams
    phase: SenderPhase = SenderPhase.INIT
    nonce_a1: int = 0
    nonce_a2: int = 0
    exp_sum: int = 0
    keys: tuple[int, ...] = ()
    exps: int = 0
    setup_exps: int = 0


@dataclass(frozen=True)
class ReceiverState:
    session: SessionParams
    choices: tuple[int, ...]
    factor: int
    phase: ReceiverPhase = ReceiverPhase.INIT
    nonce_b1: int = 0
    nonce_b2: int = 0
    nonce_b3: int = 0
    keys: tuple[int, ...] = ()
    exps: int = 0
    setup_exps: int = 0

    @property
    def blinding_exponent(self) -> int:
        # N_B1 * N_B2 / N_B3 as an exact integer; never a modular inverse.
        num = self.nonce_b1 * self.nonce_b2
        if num % self.nonce_b3:
            raise ParameterError("N_B3 does not divide N_B1 * N_B2")
        return num // self.nonce_b3

    @property
    def unblinding_exponent(self) -> int:
        if self.nonce_b3 % self.nonce_b2:
            raise ParameterError("N_B2 does not divide N_B3")
        return self.nonce_b3 // self.nonce_b2


def default_factor(k: int) -> int:
    return max(k, 2)


def _check_element(value: int, p: int, what: str) -> None:
    if not isinstance(value, int) or not 0 < value < p:
        raise ProtocolError(f"{what} outside [1, p-1]")


def sender_init(session: SessionParams, rng=None) -> tuple[SenderState, MsgA]:
    check_session(session)
    rng = rng or _system_rng
    group = session.group
    na1 = rng.randint(1, group.p - 2)
    exp_sum = na1 + sum(session.xs)
    ma = mod_exp(group.g, exp_sum, group)
    state = SenderState(
        session=session,
        phase=SenderPhase.SENT_MA,
        nonce_a1=na1,
        exp_sum=exp_sum,
        setup_exps=1,
    )
    return state, MsgA(ma)


def receiver_init(session: SessionParams, choices, factor: int | None = None) -> ReceiverState:
    """Validate the choice set (1-based indices) and fix the nonce factor."""
    chosen = tuple(int(c) for c in choices)
    if len(chosen) != session.k:
        raise ChoiceError(f"expected {session.k} choices, got {len(chosen)}")
    if len(set(chosen)) != len(chosen):
        raise ChoiceError("duplicate choices")
    if any(not 1 <= c <= session.n for c in chosen):
        raise ChoiceError(f"choices must lie in [1, {session.n}]")
    factor = default_factor(session.k) if factor is None else int(factor)
    if factor < 1:
        raise ParameterError("nonce factor must be positive")
    return ReceiverState(session=session, choices=tuple(sorted(chosen)), factor=factor)


def draw_receiver_nonces(factor: int, rng) -> tuple[int, int, int]:
    """(N_B1, N_B2, N_B3) with factor | N_B1 and N_B3 = factor * N_B2 by construction."""
    nb1 = factor * rng.randint(1, NONCE_BOUND)
    nb2 = rng.randint(1, NONCE_BOUND)
    return nb1, nb2, factor * nb2


def _receiver_choose(state: ReceiverState, msg_a: MsgA, rng) -> tuple[ReceiverState, MsgChoice]:
    if state.phase is not ReceiverPhase.INIT:
        raise StateError(f"receiver cannot accept MsgA in phase {state.phase.value}")
    session = state.session
    group = session.group
    _check_element(msg_a.ma, group.p, "M_A")
    nb1, nb2, nb3 = draw_receiver_nonces(state.factor, rng or _system_rng)
    state = replace(state, nonce_b1=nb1, nonce_b2=nb2, nonce_b3=nb3)
    blind = state.blinding_exponent
    setup = 0
    mjs = []
    for c in state.choices:
        gx = mod_exp(group.g, session.xs[c - 1], group)
        setup += 1
        base = msg_a.ma * mod_inv(gx, group) % group.p
        mjs.append(mod_exp(base, blind, group))
    mb = mod_exp(group.g, nb1, group)
    state = replace(
        state,
        phase=ReceiverPhase.SENT_CHOICE,
        exps=state.exps + len(mjs),
        setup_exps=state.setup_exps + setup + 1,
    )
    return state, MsgChoice(mjs=tuple(mjs), mb=mb)


def receiver_choose(session: SessionParams, msg_a: MsgA, choices, rng=None,
                    factor: int | None = None) -> tuple[ReceiverState, MsgChoice]:
    check_session(session)
    return _receiver_choose(receiver_init(session, choices, factor), msg_a, rng)


def sender_respond(state: SenderState, msg_choice: MsgChoice, rng=None) -> tuple[SenderState, MsgReply]:
    if state.phase is not SenderPhase.SENT_MA:
        raise StateError(f"sender cannot accept MsgChoice in phase {state.phase.value}")
    session = state.session
    group = session.group
    if len(msg_choice.mjs) != session.k:
        raise ProtocolError(f"MsgChoice carries {len(msg_choice.mjs)} elements, agreed k={session.k}")
    _check_element(msg_choice.mb, group.p, "M_B")
    for mj in msg_choice.mjs:
        _check_element(mj, group.p, "M_j")
    na2 = (rng or _system_rng).randint(1, group.p - 2)
    keys = []
    for x in session.xs:
        e = state.exp_sum - x
        assert e >= state.nonce_a1 > 0
        keys.append(mod_exp(msg_choice.mb, e * na2, group))
    replies = tuple(mod_exp(mj, na2, group) for mj in msg_choice.mjs)
    state = replace(
        state,
        phase=SenderPhase.RESPONDED,
        nonce_a2=na2,
        keys=tuple(keys),
        exps=state.exps + len(keys) + len(replies),
    )
    return state, MsgReply(replies)


def receiver_recover(state: ReceiverState, msg_reply: MsgReply) -> tuple[ReceiverState, tuple[int, ...]]:
    if state.phase is not ReceiverPhase.SENT_CHOICE:
        raise StateError(f"receiver cannot accept MsgReply in phase {state.phase.value}")
    group = state.session.group
    if len(msg_reply.replies) != state.session.k:
        raise ProtocolError(f"MsgReply carries {len(msg_reply.replies)} elements, expected {state.session.k}")
    for r in msg_reply.replies:
        _check_element(r, group.p, "reply")
    unblind = state.unblinding_exponent
    keys = tuple(mod_exp(r, unblind, group) for r in msg_reply.replies)
    state = replace(state, phase=ReceiverPhase.RECOVERED, keys=keys, exps=state.exps + len(keys))
    return state, keys


def sender_seal(state: SenderState, secrets) -> tuple[SenderState, MsgSecrets]:
    """Seal all n secrets, S_i under K_Ai, in index order."""
    if state.phase is not SenderPhase.RESPONDED:
        raise StateError(f"sender cannot seal in phase {state.phase.value}")
    items = [s if isinstance(s, Secret) else Secret(s) for s in secrets]
    if len(items) != state.session.n:
        raise ParameterError(f"expected {state.session.n} secrets, got {len(items)}")
    sealed = tuple(
        seal(s, derive_key(key, state.session, i))
        for i, (s, key) in enumerate(zip(items, state.keys), start=1)
    )
    return replace(state, phase=SenderPhase.SEALED), MsgSecrets(sealed)


def receiver_open(state: ReceiverState, msg_secrets: MsgSecrets) -> dict[int, bytes]:
    """Check commitment distinctness, then unseal each chosen secret.

    Raises :class:`SameMessageError` if any two commitments coincide and
    :class:`VerificationError` if a chosen secret fails its commitment.
    """
    if state.phase is not ReceiverPhase.RECOVERED:
        raise StateError(f"receiver cannot accept MsgSecrets in phase {state.phase.value}")
    if len(msg_secrets.sealed) != state.session.n:
        raise ProtocolError(f"MsgSecrets carries {len(msg_secrets.sealed)} items, expected {state.session.n}")
    require_distinct([s.commitment for s in msg_secrets.sealed])
    out = {}
    for c, key in zip(state.choices, state.keys):
        sym = derive_key(key, state.session, c)
        out[c] = unseal(msg_secrets.sealed[c - 1], sym, index=c).payload
    return out


def sender_step(state: SenderState, message, rng=None):
    """Dispatch an incoming message; the only one a sender ever accepts is MsgChoice."""
    if isinstance(message, MsgChoice) and state.phase is SenderPhase.SENT_MA:
        return sender_respond(state, message, rng)
    raise StateError(f"sender in phase {state.phase.value} cannot accept {type(message).__name__}")


def receiver_step(state: ReceiverState, message, rng=None):
    """Dispatch an incoming message against the receiver's phase.

    Returns ``(state, outgoing_or_result)``: a MsgChoice after MsgA, the
    recovered keys after MsgReply, the opened secrets after MsgSecrets.
    """
    if isinstance(message, MsgA) and state.phase is ReceiverPhase.INIT:
        return _receiver_choose(state, message, rng)
    if isinstance(message, MsgReply) and state.phase is ReceiverPhase.SENT_CHOICE:
        return receiver_recover(state, message)
    if isinstance(message, MsgSecrets) and state.phase is ReceiverPhase.RECOVERED:
        return state, receiver_open(state, message)
    raise StateError(f"receiver in phase {state.phase.value} cannot accept {type(message).__name__}")


@dataclass
class RunResult:
    """Everything produced by an in-memory protocol run."""

    sender: SenderState
    receiver: ReceiverState
    msg_a: MsgA
    msg_choice: MsgChoice
    msg_reply: MsgReply
    msg_secrets: MsgSecrets | None = None
    recovered: dict[int, bytes] = field(default_factory=dict)


def run_k_of_n(session: SessionParams, choices, secrets=None, *, sender_rng=None,
               receiver_rng=None, factor: int | None = None) -> RunResult:
    """Run the whole exchange in memory. Without ``secrets`` it stops after key agreement."""
    s_state, msg_a = sender_init(session, sender_rng)
    r_state, msg_choice = receiver_choose(session, msg_a, choices, receiver_rng, factor)
    s_state, msg_reply = sender_respond(s_state, msg_choice, sender_rng)
    r_state, _ = receiver_recover(r_state, msg_reply)
    result = RunResult(s_state, r_state, msg_a, msg_choice, msg_reply)
    if secrets is not None:
        result.sender, result.msg_secrets = sender_seal(s_state, secrets)
        result.recovered = receiver_open(r_state, result.msg_secrets)
    return result


def run_1_of_n(session: SessionParams, choice: int, secrets=None, **kwargs) -> RunResult:
    if session.k != 1:
        raise ParameterError("1-out-of-n requires k = 1")
    return run_k_of_n(session, [choice], secrets, **kwargs)
