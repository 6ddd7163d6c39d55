"""Diffie-Hellman based 1-out-of-n and k-out-of-n oblivious transfer."""

from .errors import (
    AccountingError,
    ChoiceError,
    OTError,
    ParameterError,
    PeerAbort,
    ProtocolError,
    SameMessageError,
    StateError,
    VerificationError,
)
from .group import GroupParams, ScriptedRandom, generate_safe_prime, mod_exp, mod_inv, validate_params
from .protocol import (
    MsgA,
    MsgChoice,
    MsgReply,
    MsgSecrets,
    ReceiverState,
    SenderState,
    SessionParams,
    receiver_choose,
    receiver_open,
    receiver_recover,
    run_1_of_n,
    run_k_of_n,
    sender_init,
    sender_respond,
    sender_seal,
)
from .sealing import SealedSecret, Secret, check_distinct, derive_key, seal, unseal

__version__ = "0.1.0"
