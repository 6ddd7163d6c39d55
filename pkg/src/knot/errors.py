"""Exception hierarchy shared by every layer of the package."""

from __future__ import annotations


class OTError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(OTError, ValueError):
    """Group or session parameters are out of range or inconsistent."""


class ChoiceError(OTError, ValueError):
    """The receiver's choice set is malformed (duplicate, out of range, wrong size)."""


class StateError(OTError):
    """A message or operation arrived while the state machine was in the wrong phase."""


class ProtocolError(OTError):
    """A peer message is well-formed on the wire but violates the protocol contract."""


class PeerAbort(ProtocolError):
    """The peer sent an Error frame and abandoned the session."""

    def __init__(self, code: int, reason: str):
        super().__init__(f"peer aborted (code {code}): {reason}")
        self.code = code
        self.reason = reason


class VerificationError(OTError):
    """A decrypted secret did not match its commitment."""

    def __init__(self, index: int | None, message: str = "commitment mismatch"):
        where = f" at index {index}" if index is not None else ""
        super().__init__(message + where)
        self.index = index


class SameMessageError(VerificationError):
    """Two or more commitments are identical: the sender reused a secret."""

    def __init__(self, duplicates: list[int]):
        super().__init__(None, f"duplicate commitments at indices {duplicates}")
        self.duplicates = duplicates


class AccountingError(OTError):
    """A transcript is too incomplete to produce a cost report."""
