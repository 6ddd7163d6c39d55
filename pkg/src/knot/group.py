"""Safe-prime multiplicative groups: arithmetic, parameter generation, validation.

All group elements are plain Python ints. A :class:`GroupParams` describes
``Z_p^*`` for a safe prime ``p = 2q + 1`` together with a generator ``g`` of the
full group (order ``p - 1``).
"""

from __future__ import annotations

import functools
import random
import secrets
from dataclasses import dataclass
from pathlib import Path

from .errors import ParameterError

MR_ROUNDS = 40
TRIAL_LIMIT = 10_000
MIN_BITS = 5
MAX_BITS = 4096
DEFAULT_BITS = 512

# Floor for configured (file/CLI) parameters; the protocol engine itself accepts
# any safe-prime group so desk-scale tests can enumerate tiny groups.
MIN_P = 23
SMALLEST_SAFE_PRIME = 5

_system_rng = secrets.SystemRandom()


def _sieve(limit: int) -> list[int]:
    flags = bytearray([1]) * limit
    flags[0:2] = b"\x00\x00"
    for i in range(2, int(limit**0.5) + 1):
        if flags[i]:
            flags[i * i :: i] = bytes(len(range(i * i, limit, i)))
    return [i for i, f in enumerate(flags) if f]


SMALL_PRIMES: tuple[int, ...] = tuple(_sieve(TRIAL_LIMIT))
_SIEVE_PRIMES: tuple[int, ...] = tuple(_sieve(1 << 18))[1:]


@dataclass(frozen=True)
class GroupParams:
    p: int
    q: int
    g: int

    @property
    def order(self) -> int:
        return self.p - 1

    @property
    def byte_length(self) -> int:
        return (self.p.bit_length() + 7) // 8


def mod_exp(base: int, exponent: int, params: GroupParams) -> int:
    """``base ** exponent mod p`` with the exponent reduced mod ``p - 1``."""
    if not 0 < base < params.p:
        raise ParameterError(f"base {base} outside [1, p-1]")
    if exponent < 0:
        raise ParameterError("exponent must be non-negative")
    return pow(base, exponent % (params.p - 1), params.p)


def mod_inv(a: int, params: GroupParams) -> int:
    if not 0 < a < params.p:
        raise ParameterError(f"{a} has no inverse mod {params.p}")
    return pow(a, -1, params.p)


def _miller_rabin(n: int, rounds: int, rng) -> bool:
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for _ in range(rounds):
        a = rng.randrange(2, n - 1)
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def is_probable_prime(n: int, rounds: int = MR_ROUNDS, rng=None) -> bool:
    """Trial division below 10^4, then Miller-Rabin with random bases.

    Exact for ``n < 10^8`` (trial division alone settles it).
    """
    if n < 2:
        return False
    for r in SMALL_PRIMES:
        if n == r:
            return True
        if n % r == 0:
            return False
    if n < TRIAL_LIMIT * TRIAL_LIMIT:
        return True
    return _miller_rabin(n, rounds, rng or _system_rng)


def find_generator(p: int, q: int) -> int:
    """First prime candidate 2, 3, 5, ... generating all of ``Z_p^*``."""
    for g in SMALL_PRIMES:
        if g > p - 2:
            break
        if pow(g, 2, p) != 1 and pow(g, q, p) != 1:
            return g
    # Only reachable for p = 5, where 2 already works; kept as a guard.
    raise ParameterError(f"no small generator found for p={p}")


def _safe_prime_small(bits: int, rng) -> int:
    lo, hi = 1 << (bits - 2), 1 << (bits - 1)
    while True:
        q = rng.randrange(lo, hi)
        if is_probable_prime(q, rng=rng) and is_probable_prime(2 * q + 1, rng=rng):
            return 2 * q + 1


def _safe_prime_sieved(bits: int, rng, window: int = 1 << 16) -> int:
    # Sieve a window of odd q candidates for small factors of q and 2q+1 at once.
    lo, hi = 1 << (bits - 2), 1 << (bits - 1)
    while True:
        q0 = rng.randrange(lo, hi - 2 * window) | 1
        alive = bytearray([1]) * window
        for r in _SIEVE_PRIMES:
            if r.bit_length() >= bits - 2:
                break
            inv2 = (r + 1) // 2
            for residue in (0, (r - 1) // 2):
                start = (residue - q0) * inv2 % r
                alive[start::r] = bytes(len(range(start, window, r)))
        for i in range(window):
            if not alive[i]:
                continue
            q = q0 + 2 * i
            p = 2 * q + 1
            if pow(2, q - 1, q) != 1 or pow(2, p - 1, p) != 1:
                continue
            if is_probable_prime(q, rng=rng) and is_probable_prime(p, rng=rng):
                return p


def generate_safe_prime(bits: int = DEFAULT_BITS, rng=None) -> GroupParams:
    """Random safe prime with exactly ``bits`` bits, plus a full-group generator."""
    if not MIN_BITS <= bits <= MAX_BITS:
        raise ParameterError(f"bits must lie in [{MIN_BITS}, {MAX_BITS}], got {bits}")
    rng = rng or _system_rng
    p = _safe_prime_small(bits, rng) if bits < 40 else _safe_prime_sieved(bits, rng)
    q = (p - 1) // 2
    return GroupParams(p=p, q=q, g=find_generator(p, q))


@functools.lru_cache(maxsize=256)
def validate_params(candidate: GroupParams, min_p: int = MIN_P) -> bool:
    """True iff ``candidate`` is a safe-prime group with a full-order generator."""
    try:
        p, q, g = int(candidate.p), int(candidate.q), int(candidate.g)
    except (AttributeError, TypeError, ValueError):
        return False
    if p < max(min_p, SMALLEST_SAFE_PRIME) or p != 2 * q + 1:
        return False
    if not 2 <= g <= p - 2:
        return False
    if pow(g, 2, p) == 1 or pow(g, q, p) == 1:
        return False
    return is_probable_prime(q) and is_probable_prime(p)


def format_params(params: GroupParams, xs=None) -> str:
    lines = [f"p={params.p}", f"q={params.q}", f"g={params.g}"]
    if xs is not None:
        lines.append("xs=" + ",".join(str(x) for x in xs))
    return "\n".join(lines) + "\n"


def parse_params(text: str) -> tuple[GroupParams, tuple[int, ...] | None]:
    """Parse ``p=``/``q=``/``g=`` lines and an optional ``xs=`` index-set line."""
    fields: dict[str, str] = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ParameterError(f"malformed params line: {raw!r}")
        fields[key.strip()] = value.strip()
    try:
        params = GroupParams(p=int(fields["p"]), q=int(fields["q"]), g=int(fields["g"]))
        xs = tuple(int(v) for v in fields["xs"].split(",")) if "xs" in fields else None
    except KeyError as exc:
        raise ParameterError(f"params file missing {exc.args[0]!r}") from None
    except ValueError as exc:
        raise ParameterError(f"params file has a non-decimal value: {exc}") from None
    return params, xs


def load_params(path) -> tuple[GroupParams, tuple[int, ...] | None]:
    return parse_params(Path(path).read_text())


def save_params(path, params: GroupParams, xs=None) -> None:
    Path(path).write_text(format_params(params, xs))


class ScriptedRandom(random.Random):
    """A ``random.Random`` whose ``randint`` replays a fixed script of values.

    Used to inject known nonces (worked examples, golden traces). Every drawn
    value is range-checked against the caller's bounds.
    """

    def __new__(cls, values):
        return super().__new__(cls)

    def __init__(self, values):
        super().__init__(0)
        self._script = list(values)

    def randint(self, a: int, b: int) -> int:
        if not self._script:
            raise RuntimeError("scripted randomness exhausted")
        value = self._script.pop(0)
        if not a <= value <= b:
            raise ValueError(f"scripted value {value} outside [{a}, {b}]")
        return value

    @property
    def remaining(self) -> int:
        return len(self._script)
