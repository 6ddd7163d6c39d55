"""Symmetric sealing of secrets under oblivious keys, with hash commitments.

The cipher is a SHA-256 counter-mode keystream XORed onto the payload. Integrity
comes solely from the unkeyed commitment ``H(tag || payload)`` that travels next
to each ciphertext; a receiver who decrypts with the wrong key gets garbage whose
hash does not match.
"""

from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass

from .errors import ParameterError, SameMessageError, VerificationError

SUITE_SHA256_CTR = 0x01
KEY_SIZE = 32
DIGEST_SIZE = 32
MAX_PAYLOAD = 1 << 32

KEY_DOMAIN = b"knot/v1/key"
COMMIT_DOMAIN = b"knot/v1/commit"


@dataclass(frozen=True)
class Secret:
    payload: bytes

    def __post_init__(self):
        if not isinstance(self.payload, (bytes, bytearray)):
            raise ParameterError("secret payload must be bytes")
        if not 1 <= len(self.payload) < MAX_PAYLOAD:
            raise ParameterError("secret payload must be non-empty and shorter than 2^32 bytes")
        object.__setattr__(self, "payload", bytes(self.payload))


@dataclass(frozen=True)
class SealedSecret:
    ciphertext: bytes
    commitment: bytes

    def __post_init__(self):
        if len(self.commitment) != DIGEST_SIZE:
            raise ParameterError(f"commitment must be {DIGEST_SIZE} bytes")


def derive_key(element: int, session, index_tag: int) -> bytes:
    """Hash a group element into a 32-byte symmetric key bound to ``p`` and the index."""
    p = session.group.p
    if not 0 < element < p:
        raise ParameterError("key element outside [1, p-1]")
    width = (p.bit_length() + 7) // 8
    h = hashlib.sha256(KEY_DOMAIN)
    h.update(p.to_bytes(width, "big"))
    h.update(element.to_bytes(width, "big"))
    h.update(index_tag.to_bytes(4, "big"))
    return h.digest()


def commitment(payload: bytes) -> bytes:
    return hashlib.sha256(COMMIT_DOMAIN + payload).digest()


def keystream(key: bytes, length: int) -> bytes:
    blocks = []
    for counter in range((length + DIGEST_SIZE - 1) // DIGEST_SIZE):
        blocks.append(hashlib.sha256(key + counter.to_bytes(8, "big")).digest())
    return b"".join(blocks)[:length]


def _xor(data: bytes, key: bytes) -> bytes:
    stream = keystream(key, len(data))
    return (int.from_bytes(data, "big") ^ int.from_bytes(stream, "big")).to_bytes(len(data), "big")


def seal(secret: Secret, key: bytes) -> SealedSecret:
    if len(key) != KEY_SIZE:
        raise ParameterError(f"key must be {KEY_SIZE} bytes")
    return SealedSecret(ciphertext=_xor(secret.payload, key), commitment=commitment(secret.payload))


def unseal(sealed: SealedSecret, key: bytes, index: int | None = None) -> Secret:
    """Decrypt and check the commitment; raises :class:`VerificationError` on mismatch."""
    if len(key) != KEY_SIZE:
        raise ParameterError(f"key must be {KEY_SIZE} bytes")
    if not sealed.ciphertext:
        raise VerificationError(index, "empty ciphertext")
    payload = _xor(sealed.ciphertext, key)
    if not hmac.compare_digest(commitment(payload), sealed.commitment):
        raise VerificationError(index)
    return Secret(payload)


def duplicate_indices(commitments) -> list[int]:
    """1-based indices of every commitment that appears more than once."""
    seen: dict[bytes, list[int]] = {}
    for i, c in enumerate(commitments, start=1):
        seen.setdefault(bytes(c), []).append(i)
    return sorted(i for group in seen.values() if len(group) > 1 for i in group)


def check_distinct(commitments) -> bool:
    return not duplicate_indices(commitments)


def require_distinct(commitments) -> None:
    dups = duplicate_indices(commitments)
    if dups:
        raise SameMessageError(dups)
