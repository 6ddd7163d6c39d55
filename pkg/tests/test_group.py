import random

import pytest
from hypothesis import given, strategies as st

from knot.errors import ParameterError
from knot.group import (
    GroupParams,
    ScriptedRandom,
    find_generator,
    format_params,
    generate_safe_prime,
    is_probable_prime,
    mod_exp,
    mod_inv,
    parse_params,
    validate_params,
)
from knot.oracle import element_order, trial_division_is_prime

from .conftest import EXAMPLE_GROUP, TINY_GROUPS


@pytest.mark.parametrize("base, exp, expected", [(5, 19, 7), (5, 0, 1), (13, 8, 2)])
def test_mod_exp_examples(base, exp, expected):
    assert mod_exp(base, exp, EXAMPLE_GROUP) == expected


def test_mod_exp_reduces_exponent_mod_order():
    assert mod_exp(5, 19 + 22 * 7, EXAMPLE_GROUP) == 7


@pytest.mark.parametrize("base", [0, 23, -1, 100])
def test_mod_exp_rejects_out_of_range_base(base):
    with pytest.raises(ParameterError):
        mod_exp(base, 3, EXAMPLE_GROUP)


def test_mod_inv_examples():
    assert mod_inv(10, EXAMPLE_GROUP) == 7
    assert 7 * mod_inv(10, EXAMPLE_GROUP) % 23 == 3
    assert mod_inv(1, EXAMPLE_GROUP) == 1
    assert mod_inv(20, EXAMPLE_GROUP) == 15
    assert 7 * mod_inv(20, EXAMPLE_GROUP) % 23 == 13


def test_mod_inv_of_zero_fails():
    with pytest.raises(ParameterError):
        mod_inv(0, EXAMPLE_GROUP)


@given(st.sampled_from(TINY_GROUPS), st.data())
def test_inverse_property(group, data):
    a = data.draw(st.integers(1, group.p - 1))
    assert a * mod_inv(a, group) % group.p == 1


@given(st.sampled_from(TINY_GROUPS), st.data())
def test_exponent_addition(group, data):
    a = data.draw(st.integers(1, group.p - 1))
    e1, e2 = data.draw(st.integers(0, 10**6)), data.draw(st.integers(0, 10**6))
    assert mod_exp(a, e1 + e2, group) == mod_exp(a, e1, group) * mod_exp(a, e2, group) % group.p


@pytest.mark.parametrize("group", TINY_GROUPS, ids=lambda g: f"p{g.p}")
def test_generator_has_full_order(group):
    assert mod_exp(group.g, group.p - 1, group) == 1
    assert mod_exp(group.g, group.q, group) != 1


def test_five_bit_safe_prime_is_23():
    # oracle: every 5-bit prime p with (p-1)/2 prime
    five_bit = [p for p in range(16, 32) if trial_division_is_prime(p) and trial_division_is_prime((p - 1) // 2)]
    assert five_bit == [23]
    for seed in range(5):
        params = generate_safe_prime(5, random.Random(seed))
        assert (params.p, params.q, params.g) == (23, 11, 5)


@pytest.mark.parametrize("bits", [5, 6, 8, 16, 24, 40, 64, 128])
def test_generated_params_validate(bits):
    params = generate_safe_prime(bits, random.Random(bits))
    assert params.p.bit_length() == bits
    assert validate_params(params, 5)


def test_sixteen_bit_params_by_trial_division():
    params = generate_safe_prime(16, random.Random(7))
    assert params.p.bit_length() == 16
    assert trial_division_is_prime(params.p) and trial_division_is_prime(params.q)
    assert element_order(params.p, params.g) == params.p - 1


@pytest.mark.parametrize("bits", [4, 0, 4097])
def test_bits_out_of_bounds(bits):
    with pytest.raises(ParameterError):
        generate_safe_prime(bits)


@pytest.mark.parametrize("g, expected", [(5, True), (1, False), (2, False), (22, False), (0, False)])
def test_validate_example_group(g, expected):
    assert 2 ** 11 % 23 == 1  # 2 only spans the order-11 subgroup
    assert validate_params(GroupParams(23, 11, g)) is expected


def test_validate_rejects_bad_structure():
    assert not validate_params(GroupParams(23, 10, 5))
    assert not validate_params(GroupParams(21, 10, 2))
    assert not validate_params(GroupParams(11, 5, 2))  # below the configured floor
    assert validate_params(GroupParams(11, 5, 2), 5)


def test_validate_agrees_with_trial_division_below_ten_thousand():
    for p in range(2, 10_000):
        q = (p - 1) // 2
        safe = p >= 5 and trial_division_is_prime(p) and trial_division_is_prime(q) and p == 2 * q + 1
        if safe:
            g = next(c for c in range(2, p - 1) if element_order(p, c) == p - 1)
            assert validate_params(GroupParams(p, q, g), 5), p
            # a square never generates the whole group
            assert not validate_params(GroupParams(p, q, 4), 5), p
        else:
            assert not validate_params(GroupParams(p, q, 2), 5), p


def test_is_probable_prime_large_known_values():
    assert is_probable_prime(2**127 - 1)
    assert not is_probable_prime((2**61 - 1) * (2**31 - 1))
    # Carmichael number
    assert not is_probable_prime(561)


def test_find_generator_order_of_candidates():
    assert find_generator(23, 11) == 5
    assert find_generator(11, 5) == 2


def test_params_text_round_trip():
    text = format_params(EXAMPLE_GROUP, xs=(1, 2, 3))
    assert text == "p=23\nq=11\ng=5\nxs=1,2,3\n"
    assert parse_params(text) == (EXAMPLE_GROUP, (1, 2, 3))
    assert parse_params("p=23\nq=11\ng=5\n") == (EXAMPLE_GROUP, None)


@pytest.mark.parametrize("text", ["p=23\nq=11\n", "p=23\nq=eleven\ng=5\n", "garbage\n"])
def test_params_text_errors(text):
    with pytest.raises(ParameterError):
        parse_params(text)


def test_scripted_random_replays_and_checks_range():
    rng = ScriptedRandom([4, 8])
    assert rng.randint(1, 21) == 4
    with pytest.raises(ValueError):
        rng.randint(1, 5)
    with pytest.raises(RuntimeError):
        rng.randint(1, 5)
