import random

import pytest
from hypothesis import given, strategies as st

from knot.errors import ParameterError
from knot.group import mod_exp
from knot.oracle import (
    Nonces,
    brute_dlog,
    build_table,
    consistent_choices,
    generators,
    recompute,
    safe_primes_between,
    trial_division_is_prime,
    verify_key_equation,
)
from knot.protocol import SessionParams

from .conftest import EXAMPLE_GROUP, TINY_GROUPS

EXAMPLE_NONCES = Nonces(na1=4, na2=8, nb1=10, nb2=6, nb3=12)


def test_table_is_a_permutation():
    for group in TINY_GROUPS:
        table = build_table(group.p, group.g)
        assert sorted(table.powers) == list(range(1, group.p))


def test_table_rejects_non_generator():
    with pytest.raises(ParameterError):
        build_table(23, 2)
    with pytest.raises(ParameterError):
        build_table(10_007, 5)


@pytest.mark.parametrize("y, e", [(7, 19), (1, 0), (9, 10)])
def test_brute_dlog_example(y, e):
    assert brute_dlog(y, build_table(23, 5)) == e


def test_brute_dlog_rejects_non_element():
    with pytest.raises(ParameterError):
        brute_dlog(0, build_table(23, 5))


@given(st.sampled_from(TINY_GROUPS), st.integers(0, 10**6))
def test_dlog_inverts_mod_exp(group, e):
    table = build_table(group.p, group.g)
    assert brute_dlog(mod_exp(group.g, e, group), table) == e % (group.p - 1)


def test_example_key_equation():
    session = SessionParams.default(EXAMPLE_GROUP, 5, 2)
    trace = recompute(build_table(23, 5), session.xs, [3, 5], EXAMPLE_NONCES)
    assert trace.ma == 7 and trace.mjs == (13, 4) and trace.mb == 9
    assert trace.keys_a == (9, 6, 4, 18, 12)
    assert trace.replies == (2, 9) and trace.keys_b == (4, 12)
    # closed form exponents (19-3)*80 and (19-5)*80
    assert trace.closed_form == (pow(5, 16 * 80, 23), pow(5, 14 * 80, 23)) == (4, 12)
    assert verify_key_equation(session, EXAMPLE_NONCES, [3, 5])


def test_corrupted_nb3_fails():
    session = SessionParams.default(EXAMPLE_GROUP, 5, 2)
    bad = Nonces(na1=4, na2=8, nb1=10, nb2=6, nb3=13)
    assert not verify_key_equation(session, bad, [3, 5])


def test_random_tiny_sessions_verify():
    rng = random.Random(5)
    for _ in range(1000):
        group = rng.choice(TINY_GROUPS[2:])
        n = rng.randint(1, min(8, group.p - 2))
        k = rng.randint(1, n)
        session = SessionParams(group, tuple(rng.sample(range(1, group.p - 1), n)), k)
        f = rng.randint(1, 5)
        nb2 = rng.randint(1, 1000)
        nonces = Nonces(rng.randint(1, group.p - 2), rng.randint(1, group.p - 2),
                        f * rng.randint(1, 1000), nb2, f * nb2)
        assert verify_key_equation(session, nonces, rng.sample(range(1, n + 1), k))


def test_enumeration_helpers():
    assert safe_primes_between(1, 100) == [5, 7, 11, 23, 47, 59, 83]
    assert generators(23)[0] == 5
    assert [n for n in range(30) if trial_division_is_prime(n)] == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]


def test_consistent_choices_example():
    table = build_table(23, 5)
    # M_1 = 13 and M_2 = 4 are squares; every blinded base 7/5^x reaches the squares,
    # so neither value narrows the choice at all.
    for mj in (13, 4):
        assert consistent_choices(table, 7, mj, (1, 2, 3, 4, 5)) == {1, 2, 3, 4, 5}
    # a non-square is reachable only from bases of full order (exponents 17 and 15, x = 2, 4)
    assert consistent_choices(table, 7, 5, (1, 2, 3, 4, 5)) == {2, 4}
