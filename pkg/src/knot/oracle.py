"""Brute-force oracles over enumerable groups (p <= 10^4).

Nothing here calls into :mod:`knot.protocol` or :func:`knot.group.mod_exp`:
exponentiation is a lookup in a power table built by repeated multiplication,
division is subtraction of discrete logs, and primality is trial division.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ParameterError

TABLE_LIMIT = 10_000


def trial_division_is_prime(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def safe_primes_between(lo: int, hi: int) -> list[int]:
    return [p for p in range(max(lo, 5), hi + 1)
            if trial_division_is_prime(p) and trial_division_is_prime((p - 1) // 2)]


def generators(p: int) -> list[int]:
    """All g in [2, p-2] whose powers hit every residue, by enumeration."""
    out = []
    for g in range(2, p - 1):
        seen, x = set(), 1
        for _ in range(p - 1):
            x = x * g % p
            seen.add(x)
        if len(seen) == p - 1:
            out.append(g)
    return out


@dataclass(frozen=True)
class TinyGroupTable:
    p: int
    g: int
    powers: tuple[int, ...]
    logs: dict

    @property
    def order(self) -> int:
        return self.p - 1

    def pow_g(self, e: int) -> int:
        return self.powers[e % self.order]

    def power(self, base: int, e: int) -> int:
        return self.powers[self.logs[base] * e % self.order]


def build_table(p: int, g: int) -> TinyGroupTable:
    if p > TABLE_LIMIT:
        raise ParameterError(f"p={p} too large to tabulate")
    powers, x = [], 1
    for _ in range(p - 1):
        powers.append(x)
        x = x * g % p
    logs = {v: e for e, v in enumerate(powers)}
    if len(logs) != p - 1:
        raise ParameterError(f"g={g} does not generate Z_{p}^*")
    return TinyGroupTable(p=p, g=g, powers=tuple(powers), logs=logs)


def brute_dlog(y: int, table: TinyGroupTable) -> int:
    """Unique e in [0, p-2] with g^e = y, found by scanning the table."""
    for e, v in enumerate(table.powers):
        if v == y:
            return e
    raise ParameterError(f"{y} is not an element of Z_{table.p}^*")


@dataclass(frozen=True)
class Nonces:
    na1: int
    na2: int
    nb1: int
    nb2: int
    nb3: int


@dataclass(frozen=True)
class OracleTrace:
    ma: int
    mjs: tuple[int, ...]
    mb: int
    keys_a: tuple[int, ...]
    replies: tuple[int, ...]
    keys_b: tuple[int, ...]
    closed_form: tuple[int, ...]


def recompute(table: TinyGroupTable, xs, choices, nonces: Nonces) -> OracleTrace | None:
    """Every protocol value from first principles, or None if the nonce ratios are not integers."""
    if (nonces.nb1 * nonces.nb2) % nonces.nb3 or nonces.nb3 % nonces.nb2:
        return None
    blind = nonces.nb1 * nonces.nb2 // nonces.nb3
    unblind = nonces.nb3 // nonces.nb2
    total = nonces.na1 + sum(xs)
    ma = table.pow_g(total)
    mb = table.pow_g(nonces.nb1)
    log_mb = table.logs[mb]
    keys_a = tuple(table.pow_g(log_mb * (total - x) * nonces.na2) for x in xs)
    chosen = sorted(choices)
    # M_A / g^x in the log domain is log(M_A) - x.
    mjs = tuple(table.pow_g((table.logs[ma] - xs[c - 1]) * blind) for c in chosen)
    replies = tuple(table.power(m, nonces.na2) for m in mjs)
    keys_b = tuple(table.power(r, unblind) for r in replies)
    closed = tuple(table.pow_g((total - xs[c - 1]) * nonces.nb1 * nonces.na2) for c in chosen)
    return OracleTrace(ma, mjs, mb, keys_a, replies, keys_b, closed)


def verify_key_equation(session, nonces: Nonces, choices) -> bool:
    """Receiver keys equal sender keys at the chosen indices and the closed form."""
    group = session.group
    table = build_table(group.p, group.g)
    trace = recompute(table, session.xs, choices, nonces)
    if trace is None:
        return False
    at_choices = tuple(trace.keys_a[c - 1] for c in sorted(choices))
    return trace.keys_b == at_choices == trace.closed_form


def powers_of(p: int, base: int) -> frozenset[int]:
    """{base^e mod p : e in [1, p-1]}, by repeated multiplication."""
    out, x = set(), 1
    for _ in range(p - 1):
        x = x * base % p
        out.add(x)
    return frozenset(out)


def reachable(table: TinyGroupTable, base: int, target: int) -> bool:
    """Does ``base^e = target`` for some e in [1, p-1]?"""
    return target in powers_of(table.p, base)


def blinded_bases(table: TinyGroupTable, ma: int, xs) -> list[int]:
    """M_A / g^x for each x, via the table's inverse powers."""
    return [ma * table.pow_g(-x) % table.p for x in xs]


def element_order(p: int, a: int) -> int:
    if a % p == 0:
        raise ParameterError("0 has no multiplicative order")
    x, order = a % p, 1
    while x != 1:
        x = x * a % p
        order += 1
    return order


def consistent_choices(table: TinyGroupTable, ma: int, mj: int, xs) -> set[int]:
    """1-based indices whose blinded base M_A / g^x can be raised to ``mj``."""
    return {i for i, base in enumerate(blinded_bases(table, ma, xs), start=1)
            if reachable(table, base, mj)}
